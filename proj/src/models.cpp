#include "models.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace negscope {

namespace {

const char* kGateNames[5] = {"i", "f", "o", "u", "m"};

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBiLstm: return "bilstm";
    case ModelKind::kDLstm: return "dlstm";
    case ModelKind::kGcn: return "gcn";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "bilstm") return ModelKind::kBiLstm;
  if (name == "dlstm") return ModelKind::kDLstm;
  if (name == "gcn") return ModelKind::kGcn;
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind '" + std::string(name) +
                                               "' (expected bilstm, dlstm or gcn)");
}

std::string to_string(PreEncoder p) { return p == PreEncoder::kBiLstm ? "bilstm" : "dense-relu"; }

PreEncoder parse_pre_encoder(std::string_view name) {
  if (name == "dense-relu" || name == "dense") return PreEncoder::kDenseRelu;
  if (name == "bilstm") return PreEncoder::kBiLstm;
  throw Error(ErrorCode::kInvalidArgument, "unknown pre-encoder '" + std::string(name) + "'");
}

std::string to_string(GcnLabelMode m) { return m == GcnLabelMode::kBias ? "bias" : "weighted"; }

GcnLabelMode parse_gcn_label_mode(std::string_view name) {
  if (name == "weighted") return GcnLabelMode::kWeighted;
  if (name == "bias") return GcnLabelMode::kBias;
  throw Error(ErrorCode::kInvalidArgument, "unknown GCN label mode '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be positive");
  };
  positive(dims.word, "word dimension");
  positive(dims.cue, "cue dimension");
  positive(dims.pos, "PoS dimension");
  positive(dims.label, "label dimension");
  positive(hidden, "hidden size");
  positive(gcn_layers, "GCN layer count");
  for (double r : {output_dropout, neighbor_dropout}) {
    if (!(r >= 0.0 && r < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "dropout rates must lie in [0,1)");
    }
  }
  if (!(init_range > 0.0)) throw Error(ErrorCode::kInvalidArgument, "init range must be > 0");
}

Vocabularies build_vocabularies(const Corpus& train) {
  Vocabularies v;
  for (const auto& s : train.sentences) {
    for (const auto& t : s.tokens) {
      v.words.add(t.form);
      v.tags.add(t.upos);
      v.labels.add(t.deprel);
    }
  }
  return v;
}

// ------------------------------------------------------------ ScopeModel

template <typename Real>
ScopeModel<Real>::ScopeModel(ModelKind kind, const ModelConfig& config, Vocabularies vocab)
    : kind_(kind), config_(config) {
  config_.validate();
  encoder_ = std::make_unique<InputEncoder<Real>>(
      params_, std::move(vocab.words), std::move(vocab.tags), std::move(vocab.labels),
      config_.dims, config_.mask, /*freeze_words=*/false);
}

template <typename Real>
PreparedInstance ScopeModel<Real>::prepare(const NegationInstance& instance) const {
  PreparedInstance p;
  p.source = &instance;
  p.tree = build_tree(*instance.sentence);
  const auto& tokens = instance.sentence->tokens;
  p.features.reserve(tokens.size());
  for (const Token& t : tokens) {
    bool cue = instance.is_cue(t.id);
    p.features.push_back(encoder_->features(t, cue));
    p.cue.push_back(cue);
    p.gold.push_back(instance.in_scope(t.id));
  }
  return p;
}

template <typename Real>
ad::Var ScopeModel<Real>::loss(ad::Tape<Real>& tape, const PreparedInstance& inst, bool train,
                               Rng& rng) const {
  auto probs = forward(tape, inst, train, rng);
  std::vector<ad::Var> terms;
  terms.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (inst.cue[i]) continue;
    terms.push_back(tape.cross_entropy(probs[i], inst.gold[i] ? 1 : 0));
  }
  if (terms.empty()) return tape.constant({Real(0)});
  return tape.sum(terms);
}

template <typename Real>
std::vector<ProbPair> ScopeModel<Real>::predict(const PreparedInstance& inst) const {
  ad::Tape<Real> tape;
  Rng unused(0);
  auto probs = forward(tape, inst, false, unused);
  std::vector<ProbPair> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (inst.cue[i]) {
      out[i] = {1.0, 0.0};
      continue;
    }
    auto v = tape.value(probs[i]);
    out[i] = {static_cast<double>(v[0]), static_cast<double>(v[1])};
  }
  return out;
}

template <typename Real>
void ScopeModel<Real>::initialize(Rng& rng) {
  std::uniform_real_distribution<double> unif(-config_.init_range, config_.init_range);
  for (auto& entry : params_) {
    auto& t = *entry.tensor;
    auto v = t.values();
    if (config_.init == InitMode::kZero) {
      std::fill(v.begin(), v.end(), Real(0));
    } else if (t.rank() == 1) {
      bool forget = entry.name.size() >= 4 &&
                    entry.name.compare(entry.name.size() - 4, 4, ".b_f") == 0;
      std::fill(v.begin(), v.end(), forget ? Real(config_.forget_bias) : Real(0));
    } else {
      for (auto& x : v) x = static_cast<Real>(unif(rng));
    }
  }
}

template <typename Real>
ad::Var ScopeModel<Real>::readout(ad::Tape<Real>& tape, ad::Var h, ad::Tensor<Real>& W,
                                  ad::Tensor<Real>& b) const {
  return tape.softmax(tape.affine({{tape.input(W), h}}, tape.input(b)));
}

// ------------------------------------------------------------- LstmLayer

template <typename Real>
void LstmLayer<Real>::add(ad::ParameterSet<Real>& params, const std::string& prefix,
                          std::size_t in, std::size_t hidden) {
  for (int g = 0; g < 4; ++g) {
    W[g] = &params.add(prefix + ".W_" + kGateNames[g], {hidden, in});
    U[g] = &params.add(prefix + ".U_" + kGateNames[g], {hidden, hidden});
    b[g] = &params.add(prefix + ".b_" + kGateNames[g], {hidden});
  }
}

template <typename Real>
std::vector<ad::Var> LstmLayer<Real>::run(ad::Tape<Real>& tape, std::span<const ad::Var> xs,
                                          bool reverse) const {
  const std::size_t n = xs.size();
  std::vector<ad::Var> out(n);
  ad::Var h, c;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t t = reverse ? n - 1 - step : step;
    std::array<ad::Var, 4> gate;
    for (int g = 0; g < 4; ++g) {
      ad::Var pre = h.valid()
                        ? tape.affine({{tape.input(*W[g]), xs[t]}, {tape.input(*U[g]), h}},
                                      tape.input(*b[g]))
                        : tape.affine({{tape.input(*W[g]), xs[t]}}, tape.input(*b[g]));
      gate[g] = g == kCell ? tape.tanh(pre) : tape.sigmoid(pre);
    }
    ad::Var cell = tape.mul(gate[kIn], gate[kCell]);
    if (c.valid()) cell = tape.add(cell, tape.mul(gate[kForget], c));
    c = cell;
    h = tape.mul(gate[kOut], tape.tanh(c));
    out[t] = h;
  }
  return out;
}

// ----------------------------------------------------------- BiLstmModel

template <typename Real>
BiLstmModel<Real>::BiLstmModel(const ModelConfig& config, Vocabularies vocab)
    : ScopeModel<Real>(ModelKind::kBiLstm, config, std::move(vocab)) {
  auto& p = this->params_;
  const std::size_t in = this->encoder_->width(false);
  const std::size_t h = this->config_.hidden;
  fwd_.add(p, "bilstm.fwd", in, h);
  bwd_.add(p, "bilstm.bwd", in, h);
  W_out_ = &p.add("bilstm.out.W", {2, 2 * h});
  b_out_ = &p.add("bilstm.out.b", {2});
}

template <typename Real>
std::vector<ad::Var> BiLstmModel<Real>::forward(ad::Tape<Real>& tape,
                                                const PreparedInstance& inst, bool train,
                                                Rng& rng) const {
  std::vector<ad::Var> xs;
  xs.reserve(inst.size());
  for (const auto& f : inst.features) xs.push_back(this->encoder_->encode(tape, f, false));
  auto hf = fwd_.run(tape, xs, false);
  auto hb = bwd_.run(tape, xs, true);
  std::vector<ad::Var> out(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    ad::Var h = tape.concat({hf[i], hb[i]});
    if (train) h = tape.dropout(h, Real(this->config_.output_dropout), rng);
    out[i] = this->readout(tape, h, *W_out_, *b_out_);
  }
  return out;
}

// ------------------------------------------------------------ DLstmModel

template <typename Real>
DLstmModel<Real>::DLstmModel(const ModelConfig& config, Vocabularies vocab)
    : ScopeModel<Real>(ModelKind::kDLstm, config, std::move(vocab)) {
  auto& p = this->params_;
  const std::size_t h = this->config_.hidden;
  W_in_ = &p.add("dlstm.in.W", {h, this->encoder_->width(true)});
  b_in_ = &p.add("dlstm.in.b", {h});
  for (int g = 0; g < 4; ++g) {
    std::string s = kGateNames[g];
    up_W_[g] = &p.add("dlstm.up.W_" + s, {h, h});
    up_U_[g] = &p.add("dlstm.up.U_" + s, {h, h});
    up_b_[g] = &p.add("dlstm.up.b_" + s, {h});
  }
  for (int g = 0; g < 5; ++g) {
    std::string s = kGateNames[g];
    down_W_[g] = &p.add("dlstm.down.W_" + s, {h, h});
    down_U_[g] = &p.add("dlstm.down.U_" + s, {h, h});
    down_A_[g] = &p.add("dlstm.down.A_" + s, {h, h});
    down_b_[g] = &p.add("dlstm.down.b_" + s, {h});
  }
  W_out_ = &p.add("dlstm.out.W", {2, h});
  b_out_ = &p.add("dlstm.out.b", {2});
}

template <typename Real>
std::vector<ad::Var> DLstmModel<Real>::project_inputs(ad::Tape<Real>& tape,
                                                      const PreparedInstance& inst) const {
  std::vector<ad::Var> xs(inst.size() + 1);
  ad::Var W = tape.input(*W_in_);
  ad::Var b = tape.input(*b_in_);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    xs[i + 1] = tape.affine({{W, this->encoder_->encode(tape, inst.features[i], true)}}, b);
  }
  return xs;
}

template <typename Real>
typename DLstmModel<Real>::TreeStates DLstmModel<Real>::bottom_up(
    ad::Tape<Real>& tape, const DependencyTree& tree, std::span<const ad::Var> inputs) const {
  if (inputs.size() != tree.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument, "dlstm bottom_up: input count does not match tree");
  }
  TreeStates st;
  st.h.resize(tree.size() + 1);
  st.c.resize(tree.size() + 1);
  std::array<ad::Var, 4> W, U, b;
  for (int g = 0; g < 4; ++g) {
    W[g] = tape.input(*up_W_[g]);
    U[g] = tape.input(*up_U_[g]);
    b[g] = tape.input(*up_b_[g]);
  }
  for (int v : tree.bottom_up_order()) {
    const auto& kids = tree.children[v];
    const ad::Var x = inputs[v];
    auto gate = [&](int g, ad::Var hsum) {
      ad::Var pre = hsum.valid() ? tape.affine({{W[g], x}, {U[g], hsum}}, b[g])
                                 : tape.affine({{W[g], x}}, b[g]);
      return g == kCell ? tape.tanh(pre) : tape.sigmoid(pre);
    };
    ad::Var hsum;
    if (!kids.empty()) {
      std::vector<ad::Var> hs;
      for (int k : kids) hs.push_back(st.h[k]);
      hsum = tape.sum(hs);
    }
    ad::Var i = gate(kIn, hsum);
    ad::Var o = gate(kOut, hsum);
    ad::Var u = gate(kCell, hsum);
    std::vector<ad::Var> cell{tape.mul(i, u)};
    for (int k : kids) {
      ad::Var f = tape.sigmoid(tape.affine({{W[kForget], x}, {U[kForget], st.h[k]}}, b[kForget]));
      cell.push_back(tape.mul(f, st.c[k]));
    }
    st.c[v] = cell.size() == 1 ? cell[0] : tape.sum(cell);
    st.h[v] = tape.mul(o, tape.tanh(st.c[v]));
  }
  return st;
}

template <typename Real>
typename DLstmModel<Real>::TreeStates DLstmModel<Real>::top_down(
    ad::Tape<Real>& tape, const DependencyTree& tree, std::span<const ad::Var> inputs,
    const TreeStates& up) const {
  const std::size_t n = tree.size();
  bool complete = up.h.size() == n + 1 && up.c.size() == n + 1;
  for (std::size_t v = 1; complete && v <= n; ++v) {
    complete = up.h[v].valid() && up.c[v].valid();
  }
  if (!complete) {
    throw Error(ErrorCode::kState, "dlstm top_down: bottom-up pass has not been run");
  }
  if (inputs.size() != n + 1) {
    throw Error(ErrorCode::kInvalidArgument, "dlstm top_down: input count does not match tree");
  }
  const bool coupled = this->config_.dlstm_coupling;
  std::array<ad::Var, 5> W, U, A, b;
  for (int g = 0; g < 5; ++g) {
    W[g] = tape.input(*down_W_[g]);
    U[g] = tape.input(*down_U_[g]);
    A[g] = tape.input(*down_A_[g]);
    b[g] = tape.input(*down_b_[g]);
  }
  const ad::Var zero = tape.zeros(this->config_.hidden);
  TreeStates st;
  st.h.resize(n + 1);
  st.c.resize(n + 1);
  for (int v : tree.top_down_order()) {
    const int p = tree.parent[v];
    // The root sees a zero parent state, which turns the recurrence into
    // LSTM(x_r, s_r^up).
    const ad::Var hp = p == 0 ? zero : st.h[p];
    const ad::Var cp = p == 0 ? zero : st.c[p];
    const ad::Var x = inputs[v];
    auto gate = [&](int g) {
      ad::Var pre = coupled ? tape.affine({{W[g], x}, {U[g], hp}, {A[g], up.h[v]}}, b[g])
                            : tape.affine({{W[g], x}, {U[g], hp}}, b[g]);
      return g == kCell ? tape.tanh(pre) : tape.sigmoid(pre);
    };
    ad::Var i = gate(kIn);
    ad::Var f = gate(kForget);
    ad::Var o = gate(kOut);
    ad::Var u = gate(kCell);
    std::vector<ad::Var> cell{tape.mul(i, u), tape.mul(f, cp)};
    if (coupled) cell.push_back(tape.mul(gate(kMem), up.c[v]));
    st.c[v] = tape.sum(cell);
    st.h[v] = tape.mul(o, tape.tanh(st.c[v]));
  }
  return st;
}

template <typename Real>
std::vector<ad::Var> DLstmModel<Real>::readout_all(ad::Tape<Real>& tape, const TreeStates& down,
                                                   bool train, Rng& rng) const {
  std::vector<ad::Var> out(down.h.size() - 1);
  for (std::size_t v = 1; v < down.h.size(); ++v) {
    ad::Var h = down.h[v];
    if (train) h = tape.dropout(h, Real(this->config_.output_dropout), rng);
    out[v - 1] = this->readout(tape, h, *W_out_, *b_out_);
  }
  return out;
}

template <typename Real>
std::vector<ad::Var> DLstmModel<Real>::forward(ad::Tape<Real>& tape,
                                               const PreparedInstance& inst, bool train,
                                               Rng& rng) const {
  auto xs = project_inputs(tape, inst);
  auto up = bottom_up(tape, inst.tree, xs);
  auto down = top_down(tape, inst.tree, xs, up);
  return readout_all(tape, down, train, rng);
}

// -------------------------------------------------------------- GcnModel

template <typename Real>
GcnModel<Real>::GcnModel(const ModelConfig& config, Vocabularies vocab)
    : ScopeModel<Real>(ModelKind::kGcn, config, std::move(vocab)) {
  auto& p = this->params_;
  const auto& cfg = this->config_;
  const std::size_t h = cfg.hidden;
  edge_labels_.add("<self>");
  for (const auto& l : this->encoder_->labels().words()) {
    edge_labels_.add(l + "/along");
    edge_labels_.add(l + "/rev");
  }
  const std::size_t rows = edge_labels_.size() + 1;
  if (cfg.gcn_label_mode == GcnLabelMode::kWeighted) {
    edge_emb_ = &p.add("gcn.edge_emb", {rows, cfg.dims.label});
  }
  const std::size_t in = this->encoder_->width(false);
  if (cfg.pre_encoder == PreEncoder::kDenseRelu) {
    W_pre_ = &p.add("gcn.pre.W", {h, in});
    b_pre_ = &p.add("gcn.pre.b", {h});
  } else {
    pre_fwd_.add(p, "gcn.pre.fwd", in, h);
    pre_bwd_.add(p, "gcn.pre.bwd", in, h);
    W_pre_ = &p.add("gcn.pre.W", {h, 2 * h});
    b_pre_ = &p.add("gcn.pre.b", {h});
  }
  const char* dir_names[3] = {"along", "rev", "self"};
  layers_.resize(cfg.gcn_layers);
  for (std::size_t k = 0; k < cfg.gcn_layers; ++k) {
    std::string pre = "gcn.layer" + std::to_string(k) + ".";
    Layer& L = layers_[k];
    for (int d = 0; d < 3; ++d) {
      L.W[d] = &p.add(pre + "W_" + dir_names[d], {h, h});
      L.gate[d] = &p.add(pre + "gate_" + dir_names[d], {1, h});
    }
    if (cfg.gcn_label_mode == GcnLabelMode::kWeighted) {
      L.W_label = &p.add(pre + "W_label", {h, cfg.dims.label});
      L.b = &p.add(pre + "b", {h});
    } else {
      L.label_bias = &p.add(pre + "label_bias", {rows, h});
    }
    L.gate_bias = &p.add(pre + "gate_bias", {rows, 1});
  }
  W_out_ = &p.add("gcn.out.W", {2, h});
  b_out_ = &p.add("gcn.out.b", {2});
}

template <typename Real>
std::size_t GcnModel<Real>::edge_label(const DependencyTree& tree, int u, int v) const {
  if (u == v) return edge_labels_.index("<self>");
  if (tree.parent[v] == u) return edge_labels_.index(tree.label[v] + "/along");
  return edge_labels_.index(tree.label[u] + "/rev");
}

template <typename Real>
std::vector<ad::Var> GcnModel<Real>::pre_encode(ad::Tape<Real>& tape,
                                                const PreparedInstance& inst) const {
  std::vector<ad::Var> xs;
  xs.reserve(inst.size());
  for (const auto& f : inst.features) xs.push_back(this->encoder_->encode(tape, f, false));
  std::vector<ad::Var> h(inst.size() + 1);
  ad::Var W = tape.input(*W_pre_);
  ad::Var b = tape.input(*b_pre_);
  if (this->config_.pre_encoder == PreEncoder::kDenseRelu) {
    for (std::size_t i = 0; i < xs.size(); ++i) h[i + 1] = tape.relu(tape.affine({{W, xs[i]}}, b));
  } else {
    auto hf = pre_fwd_.run(tape, xs, false);
    auto hb = pre_bwd_.run(tape, xs, true);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      h[i + 1] = tape.affine({{W, tape.concat({hf[i], hb[i]})}}, b);
    }
  }
  return h;
}

template <typename Real>
std::vector<ad::Var> GcnModel<Real>::layer(ad::Tape<Real>& tape, const DependencyTree& tree,
                                           std::span<const ad::Var> h, std::size_t k,
                                           bool train, Rng& rng) const {
  const Layer& L = layers_.at(k);
  const auto& cfg = this->config_;
  const bool weighted = cfg.gcn_label_mode == GcnLabelMode::kWeighted;
  std::array<ad::Var, 3> W, gate;
  for (int d = 0; d < 3; ++d) {
    W[d] = tape.input(*L.W[d]);
    // Gate vectors are stored as 1 x hidden; matvec yields a length-1 node.
    gate[d] = tape.input(*L.gate[d]);
  }
  ad::Var W_label, b;
  if (weighted) {
    W_label = tape.input(*L.W_label);
    b = tape.input(*L.b);
  }
  const Real rate = Real(cfg.neighbor_dropout);
  const bool drop = train && rate > 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const std::size_t n = tree.size();
  std::vector<ad::Var> out(n + 1);
  std::vector<std::pair<int, Direction>> nbrs;
  for (int v = 1; v <= static_cast<int>(n); ++v) {
    nbrs.clear();
    nbrs.emplace_back(v, kSelf);
    if (tree.parent[v] != 0) nbrs.emplace_back(tree.parent[v], kAlong);
    for (int c : tree.children[v]) nbrs.emplace_back(c, kReverse);

    std::vector<ad::Var> terms;
    terms.reserve(nbrs.size());
    for (auto [u, dir] : nbrs) {
      if (drop && unif(rng) < rate) continue;
      const std::size_t lab = edge_label(tree, u, v);
      ad::Var pre =
          weighted
              ? tape.affine({{W[dir], h[u]}, {W_label, tape.lookup(*edge_emb_, lab)}}, b)
              : tape.affine({{W[dir], h[u]}}, tape.lookup(*L.label_bias, lab));
      ad::Var g = tape.sigmoid(tape.affine({{gate[dir], h[u]}}, tape.lookup(*L.gate_bias, lab)));
      ad::Var term = tape.scale_by(pre, g);
      if (drop) term = tape.scale(term, Real(1) / (Real(1) - rate));
      terms.push_back(term);
    }
    out[v] = terms.empty() ? tape.zeros(cfg.hidden) : tape.relu(tape.sum(terms));
  }
  return out;
}

template <typename Real>
std::vector<ad::Var> GcnModel<Real>::encode(ad::Tape<Real>& tape, const PreparedInstance& inst,
                                            bool train, Rng& rng) const {
  auto h = pre_encode(tape, inst);
  for (std::size_t k = 0; k < layers_.size(); ++k) h = layer(tape, inst.tree, h, k, train, rng);
  return h;
}

template <typename Real>
std::vector<ad::Var> GcnModel<Real>::forward(ad::Tape<Real>& tape, const PreparedInstance& inst,
                                             bool train, Rng& rng) const {
  auto h = encode(tape, inst, train, rng);
  std::vector<ad::Var> out(inst.size());
  for (std::size_t v = 1; v <= inst.size(); ++v) {
    out[v - 1] = this->readout(tape, h[v], *W_out_, *b_out_);
  }
  return out;
}

template <typename Real>
std::unique_ptr<ScopeModel<Real>> make_model(ModelKind kind, const ModelConfig& config,
                                             Vocabularies vocab) {
  switch (kind) {
    case ModelKind::kBiLstm: return std::make_unique<BiLstmModel<Real>>(config, std::move(vocab));
    case ModelKind::kDLstm: return std::make_unique<DLstmModel<Real>>(config, std::move(vocab));
    case ModelKind::kGcn: return std::make_unique<GcnModel<Real>>(config, std::move(vocab));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind");
}

template class ScopeModel<float>;
template class ScopeModel<double>;
template class BiLstmModel<float>;
template class BiLstmModel<double>;
template class DLstmModel<float>;
template class DLstmModel<double>;
template class GcnModel<float>;
template class GcnModel<double>;
template std::unique_ptr<ScopeModel<float>> make_model<float>(ModelKind, const ModelConfig&,
                                                              Vocabularies);
template std::unique_ptr<ScopeModel<double>> make_model<double>(ModelKind, const ModelConfig&,
                                                                Vocabularies);

}  // namespace negscope
