#include "gradcheck.hpp"

#include <fmt/format.h>

#include "error.hpp"
#include "synth.hpp"

namespace negscope {

namespace {

ModelConfig small_config(ModelKind kind, std::size_t trial, std::uint64_t seed) {
  ModelConfig c;
  c.dims = {3, 2, 2, 2};
  c.hidden = 3;
  c.gcn_layers = 2;
  c.seed = seed;
  c.init_range = 0.5;
  if (kind == ModelKind::kGcn) {
    // Cycle through both pre-encoders and both label modes.
    c.pre_encoder = trial % 2 ? PreEncoder::kBiLstm : PreEncoder::kDenseRelu;
    c.gcn_label_mode = (trial / 2) % 2 ? GcnLabelMode::kBias : GcnLabelMode::kWeighted;
  }
  return c;
}

}  // namespace

GradcheckSummary run_gradcheck(const GradcheckOptions& o) {
  require(o.trials >= 1, ErrorCode::kInvalidArgument, "gradcheck: trials must be >= 1");
  require(o.tol > 0.0, ErrorCode::kInvalidArgument, "gradcheck: tol must be > 0");
  GradcheckSummary summary;
  summary.kind = o.kind;
  summary.trials = o.trials;
  for (std::size_t trial = 0; trial < o.trials; ++trial) {
    SynthOptions so;
    so.task = trial % 2 ? SynthTask::kWindow : SynthTask::kSubtree;
    so.sentences = 1;
    so.seed = o.seed * 1000003 + trial;
    // Window sentences add punctuation; keep the total inside the range.
    so.min_tokens = o.min_tokens;
    so.max_tokens = o.max_tokens;
    if (so.task == SynthTask::kWindow) {
      so.max_tokens = std::max(so.min_tokens, o.max_tokens > 2 ? o.max_tokens - 2 : so.min_tokens);
      so.min_punct = 1;
      so.max_punct = 2;
    }
    Corpus corpus = synth_generate(so);
    auto instances = to_instances(corpus);
    const auto& inst = instances.front();

    ModelConfig cfg = small_config(o.kind, trial, o.seed + trial);
    auto model = make_model<double>(o.kind, cfg, build_vocabularies(corpus));
    Rng init_rng(cfg.seed);
    model->initialize(init_rng);
    auto prepared = model->prepare(inst);

    const std::uint64_t mask_seed = o.seed ^ (trial * 0x9e3779b97f4a7c15ULL);
    auto build = [&](ad::Tape<double>& tape) {
      Rng rng(mask_seed);
      return model->loss(tape, prepared, o.train_mode, rng);
    };
    ad::GradCheckOptions gc;
    gc.eps = o.eps;
    gc.tol = o.tol;
    gc.floor = o.floor;
    auto report = ad::grad_check(build, model->params(), gc);
    summary.checked += report.checked;
    summary.kinks_skipped += report.kinks_skipped;
    if (report.max_rel_error >= summary.max_rel_error) {
      summary.max_rel_error = report.max_rel_error;
      summary.worst = fmt::format("trial {}: {}[{}] analytic {:.6g} numeric {:.6g}", trial,
                                  report.worst_parameter, report.worst_index,
                                  report.worst_analytic, report.worst_numeric);
    }
  }
  summary.passed = summary.max_rel_error <= o.tol;
  return summary;
}

std::string format_gradcheck(const GradcheckSummary& s) {
  return fmt::format(
      "gradcheck {} trials {} checked {} kinks_skipped {} max_rel_error {:.3e} {}\nworst {}\n",
      to_string(s.kind), s.trials, s.checked, s.kinks_skipped, s.max_rel_error,
      s.passed ? "PASS" : "FAIL", s.worst);
}

}  // namespace negscope
