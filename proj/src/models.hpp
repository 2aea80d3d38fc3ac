#pragma once

// Token-level scope encoders: sequential BiLSTM, bidirectional dependency
// LSTM (child-sum bottom-up pass feeding a top-down pass) and a gated
// syntactic GCN. Each produces a two-class distribution (p_out, p_in) per
// token.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autodiff.hpp"
#include "corpus.hpp"
#include "embeddings.hpp"

namespace negscope {

enum class ModelKind { kBiLstm, kDLstm, kGcn };
enum class PreEncoder { kDenseRelu, kBiLstm };
// kWeighted: W_l l_(u,v) + b inside the sum; kBias: per-label bias vector.
enum class GcnLabelMode { kWeighted, kBias };
enum class Precision { kFloat32, kFloat64 };
enum class InitMode { kUniform, kZero };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
std::string to_string(PreEncoder p);
PreEncoder parse_pre_encoder(std::string_view name);
std::string to_string(GcnLabelMode m);
GcnLabelMode parse_gcn_label_mode(std::string_view name);

struct ModelConfig {
  EmbeddingDims dims;
  std::size_t hidden = 200;
  std::size_t gcn_layers = 4;
  double output_dropout = 0.2;    // BiLSTM / D-LSTM readout
  double neighbor_dropout = 0.2;  // GCN N(v)
  PreEncoder pre_encoder = PreEncoder::kDenseRelu;
  GcnLabelMode gcn_label_mode = GcnLabelMode::kWeighted;
  // D-LSTM: inject bottom-up states into the top-down gates and memory.
  bool dlstm_coupling = true;
  std::uint64_t seed = 1;
  FeatureMask mask;
  Precision precision = Precision::kFloat32;
  InitMode init = InitMode::kUniform;
  double init_range = 0.1;
  double forget_bias = 1.0;

  void validate() const;
};

struct Vocabularies {
  Vocabulary words;
  Vocabulary tags;
  Vocabulary labels;
};

Vocabularies build_vocabularies(const Corpus& train);

// An instance with its tree and per-token feature rows resolved.
struct PreparedInstance {
  const NegationInstance* source = nullptr;
  DependencyTree tree;
  std::vector<TokenFeatures> features;  // by id - 1
  std::vector<std::uint8_t> cue;        // by id - 1
  std::vector<std::uint8_t> gold;       // by id - 1

  std::size_t size() const noexcept { return features.size(); }
};

using ProbPair = std::array<double, 2>;  // (p_out, p_in)

template <typename Real>
class ScopeModel {
 public:
  ScopeModel(ModelKind kind, const ModelConfig& config, Vocabularies vocab);
  virtual ~ScopeModel() = default;
  ScopeModel(const ScopeModel&) = delete;
  ScopeModel& operator=(const ScopeModel&) = delete;

  ModelKind kind() const noexcept { return kind_; }
  const ModelConfig& config() const noexcept { return config_; }
  ad::ParameterSet<Real>& params() noexcept { return params_; }
  const ad::ParameterSet<Real>& params() const noexcept { return params_; }
  InputEncoder<Real>& encoder() noexcept { return *encoder_; }
  const InputEncoder<Real>& encoder() const noexcept { return *encoder_; }

  PreparedInstance prepare(const NegationInstance& instance) const;

  // Softmax output node per token (by id - 1). Dropout is applied only when
  // train is set.
  virtual std::vector<ad::Var> forward(ad::Tape<Real>& tape, const PreparedInstance& inst,
                                       bool train, Rng& rng) const = 0;

  // Summed cross-entropy over non-cue tokens.
  ad::Var loss(ad::Tape<Real>& tape, const PreparedInstance& inst, bool train,
               Rng& rng) const;

  // Evaluation-mode probabilities with cue tokens forced out of scope.
  std::vector<ProbPair> predict(const PreparedInstance& inst) const;
  std::vector<ProbPair> predict(const NegationInstance& instance) const {
    return predict(prepare(instance));
  }

  // Draws every parameter according to config().init.
  void initialize(Rng& rng);

 protected:
  ad::Var readout(ad::Tape<Real>& tape, ad::Var h, ad::Tensor<Real>& W,
                  ad::Tensor<Real>& b) const;

  ModelKind kind_;
  ModelConfig config_;
  ad::ParameterSet<Real> params_;
  std::unique_ptr<InputEncoder<Real>> encoder_;
};

// Gate order used by every LSTM variant below.
enum Gate { kIn = 0, kForget = 1, kOut = 2, kCell = 3, kMem = 4 };

// One direction of a sequential LSTM.
template <typename Real>
struct LstmLayer {
  std::array<ad::Tensor<Real>*, 4> W{}, U{}, b{};

  void add(ad::ParameterSet<Real>& params, const std::string& prefix, std::size_t in,
           std::size_t hidden);
  std::vector<ad::Var> run(ad::Tape<Real>& tape, std::span<const ad::Var> xs,
                           bool reverse) const;
};

template <typename Real>
class BiLstmModel final : public ScopeModel<Real> {
 public:
  BiLstmModel(const ModelConfig& config, Vocabularies vocab);
  std::vector<ad::Var> forward(ad::Tape<Real>& tape, const PreparedInstance& inst, bool train,
                               Rng& rng) const override;

 private:
  LstmLayer<Real> fwd_, bwd_;
  ad::Tensor<Real>* W_out_;
  ad::Tensor<Real>* b_out_;
};

template <typename Real>
class DLstmModel final : public ScopeModel<Real> {
 public:
  // Hidden and memory state per node, indexed by token id (entry 0 unused).
  struct TreeStates {
    std::vector<ad::Var> h, c;
  };

  DLstmModel(const ModelConfig& config, Vocabularies vocab);

  // x_v = W [w; c; p; l] + b for every node.
  std::vector<ad::Var> project_inputs(ad::Tape<Real>& tape, const PreparedInstance& inst) const;
  TreeStates bottom_up(ad::Tape<Real>& tape, const DependencyTree& tree,
                       std::span<const ad::Var> inputs) const;
  // Throws Error(kState) unless `up` holds a completed bottom-up pass.
  TreeStates top_down(ad::Tape<Real>& tape, const DependencyTree& tree,
                      std::span<const ad::Var> inputs, const TreeStates& up) const;
  std::vector<ad::Var> readout_all(ad::Tape<Real>& tape, const TreeStates& down, bool train,
                                   Rng& rng) const;

  std::vector<ad::Var> forward(ad::Tape<Real>& tape, const PreparedInstance& inst, bool train,
                               Rng& rng) const override;

  void set_coupling(bool on) noexcept { this->config_.dlstm_coupling = on; }

 private:
  ad::Tensor<Real>* W_in_;
  ad::Tensor<Real>* b_in_;
  // Bottom-up gates i, f, o, u.
  std::array<ad::Tensor<Real>*, 4> up_W_{}, up_U_{}, up_b_{};
  // Top-down gates i, f, o, u, m; A injects h_v^up.
  std::array<ad::Tensor<Real>*, 5> down_W_{}, down_U_{}, down_A_{}, down_b_{};
  ad::Tensor<Real>* W_out_;
  ad::Tensor<Real>* b_out_;
};

template <typename Real>
class GcnModel final : public ScopeModel<Real> {
 public:
  enum Direction { kAlong = 0, kReverse = 1, kSelf = 2 };

  GcnModel(const ModelConfig& config, Vocabularies vocab);

  // Row of the (label, direction) table for the edge u -> v.
  std::size_t edge_label(const DependencyTree& tree, int u, int v) const;

  std::vector<ad::Var> pre_encode(ad::Tape<Real>& tape, const PreparedInstance& inst) const;
  // One gated graph-convolution layer; h is indexed by token id (entry 0
  // unused).
  std::vector<ad::Var> layer(ad::Tape<Real>& tape, const DependencyTree& tree,
                             std::span<const ad::Var> h, std::size_t k, bool train,
                             Rng& rng) const;
  // Pre-encoding followed by all K layers; indexed by token id.
  std::vector<ad::Var> encode(ad::Tape<Real>& tape, const PreparedInstance& inst, bool train,
                              Rng& rng) const;

  std::vector<ad::Var> forward(ad::Tape<Real>& tape, const PreparedInstance& inst, bool train,
                               Rng& rng) const override;

  const Vocabulary& edge_labels() const noexcept { return edge_labels_; }

 private:
  struct Layer {
    std::array<ad::Tensor<Real>*, 3> W{};     // by Direction
    std::array<ad::Tensor<Real>*, 3> gate{};  // gate vectors, 1 x hidden
    ad::Tensor<Real>* W_label = nullptr;      // hidden x d_l (weighted mode)
    ad::Tensor<Real>* b = nullptr;            // hidden (weighted mode)
    ad::Tensor<Real>* label_bias = nullptr;   // labels x hidden (bias mode)
    ad::Tensor<Real>* gate_bias = nullptr;    // labels x 1
  };

  Vocabulary edge_labels_;
  ad::Tensor<Real>* edge_emb_ = nullptr;
  ad::Tensor<Real>* W_pre_ = nullptr;
  ad::Tensor<Real>* b_pre_ = nullptr;
  LstmLayer<Real> pre_fwd_, pre_bwd_;
  std::vector<Layer> layers_;
  ad::Tensor<Real>* W_out_;
  ad::Tensor<Real>* b_out_;
};

template <typename Real>
std::unique_ptr<ScopeModel<Real>> make_model(ModelKind kind, const ModelConfig& config,
                                             Vocabularies vocab);

extern template class ScopeModel<float>;
extern template class ScopeModel<double>;
extern template class BiLstmModel<float>;
extern template class BiLstmModel<double>;
extern template class DLstmModel<float>;
extern template class DLstmModel<double>;
extern template class GcnModel<float>;
extern template class GcnModel<double>;

}  // namespace negscope
