// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Thresholds are pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ensemble.hpp"
#include "evaluation.hpp"
#include "gradcheck.hpp"
#include "log.hpp"
#include "model_checks.hpp"
#include "training.hpp"

using namespace negscope;

namespace {

constexpr double kGradTol = 1e-4;
constexpr std::size_t kGradTrials = 20;
constexpr double kGradSeconds = 120.0;
constexpr double kSynthF1 = 99.0;  // percent
constexpr double kTrainSeconds = 600.0;
constexpr double kStripDrop = 10.0;
constexpr double kHardShare = 0.5;
constexpr std::size_t kTrees = 100;
constexpr double kFloatPerm = 1e-6;
constexpr std::size_t kMetricSets = 50;
constexpr std::size_t kVotePairs = 1000;

// Synthetic splits: 2000 train / 500 dev / 500 held-out, 5 to 7 content
// tokens. See README for the size choice.
constexpr std::size_t kTrain = 2000, kHeld = 500;
constexpr std::size_t kMinTok = 5, kMaxTok = 7;

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Splits {
  Corpus train, dev, test;
};

Splits splits(SynthTask task, std::uint64_t seed) {
  return {oracle::synth(task, kTrain, kMinTok, kMaxTok, seed),
          oracle::synth(task, kHeld, kMinTok, kMaxTok, seed + 1),
          oracle::synth(task, kHeld, kMinTok, kMaxTok, seed + 2)};
}

ModelConfig synth_model() {
  ModelConfig m;
  m.dims = {16, 8, 8, 8};
  m.hidden = 32;
  return m;
}

struct Trained {
  TrainResult result;
  EvalReport held_out;
  double seconds = 0;
};

Trained train_and_score(ModelKind kind, const Splits& s, const ModelConfig& mc) {
  TrainConfig tc;  // 30 epochs, patience 5, lr 0.005
  auto t0 = std::chrono::steady_clock::now();
  Trained t{train_model(kind, s.train, s.dev, mc, tc), {}, 0};
  t.seconds = seconds_since(t0);
  auto inst = to_instances(s.test);
  t.held_out = evaluate(inst, scopes_from_probabilities(predict_instances(*t.result.model, inst)));
  return t;
}

std::string train_detail(const Trained& t) {
  return fmt::format("held-out F1 {:.2f} PCS {:.2f} best epoch {} ({:.0f}s)", t.held_out.prf.f1,
                     t.held_out.pcs, t.result.best_epoch, t.seconds);
}

void gradient_fidelity() {
  auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (ModelKind k : {ModelKind::kBiLstm, ModelKind::kDLstm, ModelKind::kGcn}) {
    GradcheckOptions o;
    o.kind = k;
    o.trials = kGradTrials;
    o.tol = kGradTol;
    o.min_tokens = 5;
    o.max_tokens = 12;
    auto s = run_gradcheck(o);
    pass = pass && s.passed && s.max_rel_error <= kGradTol;
    detail += fmt::format("{} {:.1e}  ", to_string(k), s.max_rel_error);
  }
  double secs = seconds_since(t0);
  report("gradient fidelity", pass && secs < kGradSeconds,
         detail + fmt::format("({} trials each, {:.1f}s)", kGradTrials, secs));
}

void subtree_task(const Splits& s, std::unique_ptr<ScopeModel<float>>& dlstm_out) {
  auto mc = synth_model();
  auto d = train_and_score(ModelKind::kDLstm, s, mc);
  report("subtree task D-LSTM", d.held_out.prf.f1 >= kSynthF1 && d.seconds < kTrainSeconds,
         train_detail(d));
  mc.gcn_layers = 4;
  auto g = train_and_score(ModelKind::kGcn, s, mc);
  report("subtree task GCN (K=4)", g.held_out.prf.f1 >= kSynthF1 && g.seconds < kTrainSeconds,
         train_detail(g));
  dlstm_out = std::move(d.result.model);
}

void window_task(const Splits& s) {
  auto mc = synth_model();
  auto with = train_and_score(ModelKind::kBiLstm, s, mc);
  report("window task BiLSTM", with.held_out.prf.f1 >= kSynthF1 && with.seconds < kTrainSeconds,
         train_detail(with));
  Splits stripped{strip_punctuation(s.train), strip_punctuation(s.dev), strip_punctuation(s.test)};
  auto without = train_and_score(ModelKind::kBiLstm, stripped, mc);
  double drop = with.held_out.prf.f1 - without.held_out.prf.f1;
  report("window task punctuation stripped", drop >= kStripDrop,
         fmt::format("F1 {:.2f} -> {:.2f}, drop {:.2f} points", with.held_out.prf.f1,
                     without.held_out.prf.f1, drop));
}

void easy_hard(const Splits& window, const Splits& subtree) {
  auto w = to_instances(window.test);
  auto ws = easy_hard_split(w);
  auto t = to_instances(subtree.test);
  auto ts = easy_hard_split(t);
  double hard = double(ts.hard.size()) / double(t.size());
  report("easy/hard consistency", ws.hard.empty() && hard >= kHardShare,
         fmt::format("window easy {}/{}; subtree hard {}/{} ({:.0f}%)", ws.easy.size(), w.size(),
                     ts.hard.size(), t.size(), 100 * hard));
}

void gcn_locality() {
  double d1 = oracle::gcn_locality(1, kTrees, 31);
  double d2 = oracle::gcn_locality(2, kTrees, 32);
  report("GCN locality", d1 == 0.0 && d2 == 0.0,
         fmt::format("max change beyond K: K=1 {:g}, K=2 {:g} ({} trees)", d1, d2, kTrees));
}

void permutation() {
  double f = oracle::permutation_invariance<float>(kTrees, 41);
  double d = oracle::permutation_invariance<double>(kTrees, 42);
  report("child-sum permutation invariance", f < kFloatPerm && d == 0.0,
         fmt::format("float {:.1e}, double {:g} ({} trees)", f, d, kTrees));
}

void coupling(ScopeModel<float>& trained, const Splits& s) {
  auto& d = dynamic_cast<DLstmModel<float>&>(trained);
  auto inst = to_instances(s.test);
  double a_norm = 0;
  for (const auto& e : trained.params())
    if (e.name.find("dlstm.down.A_") == 0)
      for (float v : e.tensor->values()) a_norm += double(v) * v;
  auto on = oracle::sibling_response(trained, inst);
  d.set_coupling(false);
  auto off = oracle::sibling_response(trained, inst);
  d.set_coupling(true);
  report("top-down coupling", off.max_sibling_change == 0.0 && on.max_sibling_change > 0.0 &&
                                  a_norm > 0.0,
         fmt::format("sibling change off {:g}, on {:.3g} ({} cues with siblings)",
                     off.max_sibling_change, on.max_sibling_change, on.instances));
}

void metric_oracles() {
  std::mt19937_64 rng(77);
  std::size_t mismatches = 0, instances = 0;
  for (std::size_t round = 0; round < kMetricSets; ++round) {
    auto task = round % 2 ? SynthTask::kWindow : SynthTask::kSubtree;
    auto c = oracle::synth(task, 20, 3, 12, 500 + round);
    auto inst = to_instances(c);
    auto pred = oracle::random_predictions(inst, rng);
    auto want = oracle::brute_metrics(inst, pred);
    auto got = evaluate(inst, pred);
    mismatches += got.prf.precision != want.p;
    mismatches += got.prf.recall != want.r;
    mismatches += got.prf.f1 != want.f;
    mismatches += got.pcs != want.pcs;
    auto split = easy_hard_split(inst);
    std::size_t e = 0, h = 0;
    for (std::size_t k = 0; k < inst.size(); ++k) {
      bool easy = oracle::brute_easy(inst[k]);
      bool in_easy = e < split.easy.size() && split.easy[e] == k;
      bool in_hard = h < split.hard.size() && split.hard[h] == k;
      e += in_easy;
      h += in_hard;
      mismatches += easy != in_easy || in_easy == in_hard;
      mismatches += lca_labels(inst[k], build_tree(*inst[k].sentence)) !=
                    oracle::brute_lca_labels(inst[k]);
    }
    instances += inst.size();
  }
  report("metric oracle equivalence", mismatches == 0,
         fmt::format("{} mismatches over {} prediction sets ({} instances)", mismatches,
                     kMetricSets, instances));
}

void voting() {
  std::size_t bad = oracle::voting_violations(kVotePairs, 91);
  report("voting algebra", bad == 0, fmt::format("{} violations over {} pairs", bad, kVotePairs));
}

void negpar() {
  const char* dir = std::getenv("NEGSCOPE_NEGPAR_DIR");
  if (!dir) {
    std::printf("SKIP  %-34s %s\n", "NegPar integration (optional)",
                "set NEGSCOPE_NEGPAR_DIR to en_train.nsf/en_dev.nsf/en_test.nsf");
    return;
  }
  namespace fs = std::filesystem;
  fs::path d(dir);
  auto train = parse_corpus((d / "en_train.nsf").string());
  auto dev = parse_corpus((d / "en_dev.nsf").string());
  auto test = parse_corpus((d / "en_test.nsf").string());
  ModelConfig mc;
  TrainConfig tc;
  auto inst = to_instances(test);
  auto a = train_model(ModelKind::kBiLstm, train, dev, mc, tc);
  auto b = train_model(ModelKind::kDLstm, train, dev, mc, tc);
  auto pa = predict_instances(*a.model, inst);
  auto pb = predict_instances(*b.model, inst);
  std::vector<Scope> pred;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    auto v = confidence_vote(pa[k], pb[k]);
    Scope s;
    for (std::size_t i = 0; i < v.label.size(); ++i)
      if (v.label[i]) s.push_back(static_cast<int>(i) + 1);
    pred.push_back(s);
  }
  auto r = evaluate(inst, pred);
  std::printf("%s  %-34s F1 %.2f (target 88.80 +-3.0), PCS %.2f (target 61.98 +-5.0)\n",
              std::fabs(r.prf.f1 - 88.80) <= 3.0 && std::fabs(r.pcs - 61.98) <= 5.0 ? "PASS"
                                                                                       : "INFO",
              "NegPar integration (optional)", r.prf.f1, r.pcs);
}

}  // namespace

int main() {
  log::set_level(log::Level::kError);
  auto t0 = std::chrono::steady_clock::now();
  gradient_fidelity();
  auto subtree = splits(SynthTask::kSubtree, 1000);
  auto window = splits(SynthTask::kWindow, 2000);
  std::unique_ptr<ScopeModel<float>> dlstm;
  subtree_task(subtree, dlstm);
  window_task(window);
  easy_hard(window, subtree);
  gcn_locality();
  permutation();
  coupling(*dlstm, subtree);
  metric_oracles();
  voting();
  negpar();
  std::printf("%s  %d criterion(s) failed, %.0fs total\n", failures ? "FAIL" : "PASS", failures,
              seconds_since(t0));
  return failures ? 1 : 0;
}
