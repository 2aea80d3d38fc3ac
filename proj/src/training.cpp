#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <mutex>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "error.hpp"
#include "log.hpp"

namespace negscope {

std::string to_string(SelectMetric m) { return m == SelectMetric::kF1 ? "f1" : "pcs"; }

SelectMetric parse_select_metric(std::string_view name) {
  if (name == "f1" || name == "F1") return SelectMetric::kF1;
  if (name == "pcs" || name == "PCS") return SelectMetric::kPcs;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown selection metric '" + std::string(name) + "' (expected f1 or pcs)");
}

void TrainConfig::validate() const {
  require(learning_rate > 0.0, ErrorCode::kInvalidArgument, "learning rate must be > 0");
  require(patience >= 1, ErrorCode::kInvalidArgument, "patience must be >= 1");
  require(max_epochs >= 1, ErrorCode::kInvalidArgument, "max epochs must be >= 1");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          ErrorCode::kInvalidArgument, "Adam betas must lie in [0, 1)");
  require(epsilon > 0.0, ErrorCode::kInvalidArgument, "Adam epsilon must be > 0");
  require(clip_norm >= 0.0, ErrorCode::kInvalidArgument, "clip norm must be >= 0");
}

template <typename Real>
Adam<Real>::Adam(ad::ParameterSet<Real>& params, const TrainConfig& config)
    : lr_(config.learning_rate), b1_(config.beta1), b2_(config.beta2), eps_(config.epsilon) {
  for (auto& entry : params) {
    if (!entry.tensor->requires_grad()) continue;
    std::size_t n = entry.tensor->size();
    slots_.push_back({entry.tensor.get(), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
  }
}

template <typename Real>
void Adam<Real>::step() {
  ++t_;
  double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (auto& s : slots_) {
    auto g = std::as_const(*s.tensor).grad();
    auto w = s.tensor->values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      double gi = g.empty() ? 0.0 : static_cast<double>(g[i]);
      if (gi == 0.0 && s.m[i] == 0.0 && s.v[i] == 0.0) continue;
      s.m[i] = b1_ * s.m[i] + (1.0 - b1_) * gi;
      s.v[i] = b2_ * s.v[i] + (1.0 - b2_) * gi * gi;
      double mhat = s.m[i] / c1;
      double vhat = s.v[i] / c2;
      w[i] = static_cast<Real>(static_cast<double>(w[i]) - lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
    if (!g.empty()) s.tensor->zero_grad();
  }
}

template <typename Real>
double clip_gradients(ad::ParameterSet<Real>& params, double max_norm) {
  double sq = 0.0;
  for (auto& entry : params) {
    if (!entry.tensor->has_grad()) continue;
    for (Real g : std::as_const(*entry.tensor).grad()) sq += static_cast<double>(g) * g;
  }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    Real scale = static_cast<Real>(max_norm / norm);
    for (auto& entry : params) {
      if (!entry.tensor->has_grad()) continue;
      for (Real& g : entry.tensor->grad()) g *= scale;
    }
  }
  return norm;
}

std::string format_epoch(const EpochRecord& r) {
  return fmt::format("epoch {} loss {:.6f} dev_f1 {:.2f} dev_pcs {:.2f}", r.epoch, r.loss, r.dev_f1,
                     r.dev_pcs);
}

template <typename Real>
std::vector<std::vector<ProbPair>> predict_instances(const ScopeModel<Real>& model,
                                                     std::span<const NegationInstance> instances) {
  std::vector<std::vector<ProbPair>> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(model.predict(inst));
  return out;
}

template <typename Real>
double mean_token_loss(const ScopeModel<Real>& model, std::span<const NegationInstance> instances) {
  double total = 0.0;
  std::size_t tokens = 0;
  Rng unused(0);
  for (const auto& inst : instances) {
    auto prepared = model.prepare(inst);
    ad::Tape<Real> tape;
    total += static_cast<double>(tape.scalar(model.loss(tape, prepared, false, unused)));
    for (auto c : prepared.cue) tokens += c ? 0 : 1;
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

std::vector<Scope> scopes_from_probabilities(const std::vector<std::vector<ProbPair>>& probs) {
  std::vector<Scope> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    for (std::size_t t = 0; t < probs[i].size(); ++t) {
      if (argmax_label(probs[i][t])) out[i].push_back(static_cast<int>(t + 1));
    }
  }
  return out;
}

std::vector<ProbabilityRecord> probability_records(std::span<const NegationInstance> instances,
                                                   const std::vector<std::vector<ProbPair>>& probs) {
  require(instances.size() == probs.size(), ErrorCode::kInvalidArgument,
          "probability_records: instance count mismatch");
  std::vector<ProbabilityRecord> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t t = 0; t < probs[i].size(); ++t) {
      out.push_back({instances[i].sentence->source_id, instances[i].cue_index,
                     static_cast<int>(t + 1), probs[i][t][0], probs[i][t][1]});
    }
  }
  return out;
}

namespace {

using Snapshot = std::vector<std::vector<float>>;

Snapshot snapshot(const ad::ParameterSet<float>& params) {
  Snapshot s;
  for (const auto& e : params) {
    auto v = e.tensor->values();
    s.emplace_back(v.begin(), v.end());
  }
  return s;
}

void restore(ad::ParameterSet<float>& params, const Snapshot& s) {
  std::size_t i = 0;
  for (auto& e : params) {
    auto v = e.tensor->values();
    std::copy(s[i].begin(), s[i].end(), v.begin());
    ++i;
  }
}

}  // namespace

TrainResult train_model(ModelKind kind, const Corpus& train, const Corpus& dev,
                        const ModelConfig& model_config, const TrainConfig& train_config,
                        const TrainInputs& inputs) {
  train_config.validate();
  auto train_instances = to_instances(train);
  if (train_instances.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "training split has no negation instances");
  }
  auto dev_instances = to_instances(dev);
  if (dev_instances.empty()) {
    log::warn("dev split has no instances; selecting on the training split");
    dev_instances = train_instances;
  }

  TrainResult result;
  result.model = make_model<float>(kind, model_config, build_vocabularies(train));
  auto& model = *result.model;
  Rng rng(model_config.seed);
  model.initialize(rng);
  if (inputs.word_vectors && model_config.mask.word) {
    std::size_t hit = model.encoder().init_word_vectors(*inputs.word_vectors);
    log::info(fmt::format("initialized {} of {} word vectors", hit, model.encoder().words().size()));
    if (inputs.freeze_words) model.params().at("emb.word").set_requires_grad(false);
  }

  std::vector<PreparedInstance> prepared;
  prepared.reserve(train_instances.size());
  std::size_t tokens = 0;
  for (const auto& inst : train_instances) {
    prepared.push_back(model.prepare(inst));
    for (auto c : prepared.back().cue) tokens += c ? 0 : 1;
  }

  Adam<float> adam(model.params(), train_config);
  Rng order_rng(train_config.seed);
  Rng dropout_rng(train_config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);

  Snapshot best;
  double best_metric = -1.0;
  std::size_t since_best = 0;
  model.params().zero_grad();
  for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    if (train_config.shuffle) std::shuffle(order.begin(), order.end(), order_rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      ad::Tape<float> tape;
      ad::Var loss = model.loss(tape, prepared[idx], true, dropout_rng);
      total += static_cast<double>(tape.scalar(loss));
      tape.backward(loss);
      clip_gradients(model.params(), train_config.clip_norm);
      adam.step();
    }
    if (!std::isfinite(total)) {
      throw Error(ErrorCode::kNumeric, fmt::format("training loss diverged in epoch {}", epoch));
    }

    auto pred = scopes_from_probabilities(predict_instances(model, dev_instances));
    EvalReport report = evaluate(dev_instances, pred);
    EpochRecord rec{epoch, tokens ? total / static_cast<double>(tokens) : 0.0, report.prf.f1,
                    report.pcs};
    result.log.push_back(rec);
    std::string line = format_epoch(rec);
    log::info(line);
    if (inputs.on_epoch) inputs.on_epoch(line);

    double metric = train_config.select == SelectMetric::kF1 ? rec.dev_f1 : rec.dev_pcs;
    if (metric > best_metric) {
      best_metric = metric;
      result.best_epoch = epoch;
      best = snapshot(model.params());
      since_best = 0;
    } else if (++since_best >= train_config.patience) {
      log::info(fmt::format("early stop after epoch {} (best epoch {})", epoch, result.best_epoch));
      break;
    }
  }
  restore(model.params(), best);
  result.best_metric = best_metric;
  return result;
}

FeatureMask ablation_mask(std::size_t i) {
  switch (i) {
    case 0: return {true, true};
    case 1: return {false, true};
    case 2: return {true, false};
  }
  throw Error(ErrorCode::kInvalidArgument, "ablation mask index out of range");
}

AblationReport ablate_grid(const Corpus& train, const Corpus& dev, const Corpus& eval,
                           const ModelConfig& model_config, const TrainConfig& train_config,
                           const TrainInputs& inputs, std::size_t threads) {
  auto eval_instances = to_instances(eval);
  std::mutex mu;
  TrainInputs guarded = inputs;
  if (inputs.on_epoch) {
    guarded.on_epoch = [&mu, &inputs](const std::string& line) {
      std::lock_guard<std::mutex> lock(mu);
      inputs.on_epoch(line);
    };
  }

  // Six runs: BiLSTM masks 0..2 then D-LSTM masks 0..2.
  auto run = [&](std::size_t job) {
    ModelKind kind = job < 3 ? ModelKind::kBiLstm : ModelKind::kDLstm;
    ModelConfig cfg = model_config;
    cfg.mask = ablation_mask(job % 3);
    TrainInputs in = guarded;
    if (in.on_epoch) {
      std::string tag = to_string(kind) + " " + AblationReport{}.masks[job % 3] + ": ";
      auto inner = in.on_epoch;
      in.on_epoch = [tag, inner](const std::string& line) { inner(tag + line); };
    }
    auto trained = train_model(kind, train, dev, cfg, train_config, in);
    return predict_instances(*trained.model, eval_instances);
  };

  std::vector<std::vector<std::vector<ProbPair>>> probs(6);
  if (threads <= 1) {
    for (std::size_t j = 0; j < 6; ++j) probs[j] = run(j);
  } else {
    for (std::size_t start = 0; start < 6; start += threads) {
      std::vector<std::future<std::vector<std::vector<ProbPair>>>> futures;
      std::size_t end = std::min<std::size_t>(6, start + threads);
      for (std::size_t j = start; j < end; ++j) futures.push_back(std::async(std::launch::async, run, j));
      for (std::size_t j = start; j < end; ++j) probs[j] = futures[j - start].get();
    }
  }

  AblationReport report;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      std::vector<Scope> pred(eval_instances.size());
      for (std::size_t i = 0; i < eval_instances.size(); ++i) {
        auto v = confidence_vote(probs[a][i], probs[3 + b][i]);
        for (std::size_t t = 0; t < v.label.size(); ++t) {
          if (v.label[t]) pred[i].push_back(static_cast<int>(t + 1));
        }
      }
      EvalReport r = evaluate(eval_instances, pred);
      report.cells[a][b] = {r.prf, r.pcs};
    }
  }
  return report;
}

std::string format_ablation(const AblationReport& r, bool tsv) {
  std::string out;
  if (tsv) {
    out += "# bilstm\tdlstm\tP\tR\tF1\tPCS\n";
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) {
        const auto& c = r.cells[a][b];
        out += fmt::format("{}\t{}\t{:.2f}\t{:.2f}\t{:.2f}\t{:.2f}\n", r.masks[a], r.masks[b],
                           c.prf.precision, c.prf.recall, c.prf.f1, c.pcs);
      }
    }
    return out;
  }
  out += fmt::format("{:<12}", "BiLSTM\\D-LSTM");
  for (const auto& m : r.masks) out += fmt::format("  {:^20}", m);
  out += '\n';
  for (std::size_t a = 0; a < 3; ++a) {
    out += fmt::format("{:<13}", r.masks[a]);
    for (std::size_t b = 0; b < 3; ++b) {
      const auto& c = r.cells[a][b].prf;
      out += fmt::format("  {:^20}", fmt::format("{:.2f}/{:.2f}/{:.2f}", c.precision, c.recall, c.f1));
    }
    out += '\n';
  }
  return out;
}

template class Adam<float>;
template class Adam<double>;
template double clip_gradients(ad::ParameterSet<float>&, double);
template double clip_gradients(ad::ParameterSet<double>&, double);
template double mean_token_loss(const ScopeModel<float>&, std::span<const NegationInstance>);
template double mean_token_loss(const ScopeModel<double>&, std::span<const NegationInstance>);
template std::vector<std::vector<ProbPair>> predict_instances(const ScopeModel<float>&,
                                                              std::span<const NegationInstance>);
template std::vector<std::vector<ProbPair>> predict_instances(const ScopeModel<double>&,
                                                              std::span<const NegationInstance>);

}  // namespace negscope
