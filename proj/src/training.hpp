#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensemble.hpp"
#include "evaluation.hpp"
#include "models.hpp"

namespace negscope {

enum class SelectMetric { kF1, kPcs };

std::string to_string(SelectMetric m);
SelectMetric parse_select_metric(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  SelectMetric select = SelectMetric::kF1;
  std::uint64_t seed = 1;
  bool shuffle = true;
  double clip_norm = 5.0;  // global gradient norm; 0 disables

  void validate() const;
};

template <typename Real>
class Adam {
 public:
  Adam(ad::ParameterSet<Real>& params, const TrainConfig& config);
  // Applies one update from the accumulated gradients and clears them.
  void step();
  std::size_t steps() const noexcept { return t_; }

 private:
  struct Slot {
    ad::Tensor<Real>* tensor;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  double lr_, b1_, b2_, eps_;
  std::size_t t_ = 0;
};

// Global L2 norm of trainable gradients; rescales them when above max_norm.
template <typename Real>
double clip_gradients(ad::ParameterSet<Real>& params, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean per non-cue token
  double dev_f1 = 0.0;
  double dev_pcs = 0.0;
};

std::string format_epoch(const EpochRecord& r);

struct TrainResult {
  std::unique_ptr<ScopeModel<float>> model;  // restored to the best epoch
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
};

struct TrainInputs {
  const EmbeddingTable* word_vectors = nullptr;
  bool freeze_words = false;
  // Receives one formatted line per epoch.
  std::function<void(const std::string&)> on_epoch;
};

// Throws Error(kInvalidArgument) when train has no instances. An empty dev
// split falls back to selecting on train.
TrainResult train_model(ModelKind kind, const Corpus& train, const Corpus& dev,
                        const ModelConfig& model_config, const TrainConfig& train_config,
                        const TrainInputs& inputs = {});

// Mean cross-entropy per non-cue token in evaluation mode.
template <typename Real>
double mean_token_loss(const ScopeModel<Real>& model, std::span<const NegationInstance> instances);

template <typename Real>
std::vector<std::vector<ProbPair>> predict_instances(const ScopeModel<Real>& model,
                                                     std::span<const NegationInstance> instances);

std::vector<Scope> scopes_from_probabilities(const std::vector<std::vector<ProbPair>>& probs);
std::vector<ProbabilityRecord> probability_records(std::span<const NegationInstance> instances,
                                                   const std::vector<std::vector<ProbPair>>& probs);

struct AblationCell {
  Prf prf;
  double pcs = 0.0;
};

struct AblationReport {
  std::array<std::string, 3> masks = {"all", "-w", "-p"};
  // cells[bilstm mask][dlstm mask]
  std::array<std::array<AblationCell, 3>, 3> cells{};
};

FeatureMask ablation_mask(std::size_t i);

// Trains BiLSTM and D-LSTM under each mask and scores all nine voting
// ensembles on eval. Cells train concurrently when threads > 1.
AblationReport ablate_grid(const Corpus& train, const Corpus& dev, const Corpus& eval,
                           const ModelConfig& model_config, const TrainConfig& train_config,
                           const TrainInputs& inputs, std::size_t threads = 1);

std::string format_ablation(const AblationReport& report, bool tsv);

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace negscope
