#include "autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace negscope::ad {

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorCode::kShape, "tensor: empty shape");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) {
      throw Error(ErrorCode::kShape,
                  "tensor: non-positive dimension in " + shape_str(shape));
    }
    n *= d;
  }
  return n;
}

template <typename Real>
Real sigmoid_of(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <typename Real>
constexpr Real kProbFloor = std::numeric_limits<Real>::min();

}  // namespace

// ---------------------------------------------------------------- Tensor

template <typename Real>
Tensor<Real>::Tensor(Shape shape, bool requires_grad)
    : shape_(std::move(shape)), requires_grad_(requires_grad) {
  values_.assign(shape_size(shape_), Real(0));
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> values, bool requires_grad)
    : shape_(std::move(shape)),
      values_(std::move(values)),
      requires_grad_(requires_grad) {
  if (shape_size(shape_) != values_.size()) {
    throw ShapeError("tensor", shape_, Shape{values_.size()});
  }
}

template <typename Real>
std::span<Real> Tensor<Real>::grad() {
  if (grad_.empty()) grad_.assign(values_.size(), Real(0));
  return grad_;
}

template <typename Real>
void Tensor<Real>::zero_grad() {
  std::fill(grad_.begin(), grad_.end(), Real(0));
}

// ---------------------------------------------------------- ParameterSet

template <typename Real>
Tensor<Real>& ParameterSet<Real>::add(const std::string& name, Shape shape,
                                      bool trainable) {
  if (contains(name)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  }
  index_.emplace(name, entries_.size());
  entries_.push_back(
      {name, std::make_unique<Tensor<Real>>(std::move(shape), trainable)});
  return *entries_.back().tensor;
}

template <typename Real>
Tensor<Real>& ParameterSet<Real>::reset(const std::string& name,
                                        Tensor<Real> tensor) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    index_.emplace(name, entries_.size());
    entries_.push_back(
        {name, std::make_unique<Tensor<Real>>(std::move(tensor))});
    return *entries_.back().tensor;
  }
  *entries_[it->second].tensor = std::move(tensor);
  return *entries_[it->second].tensor;
}

template <typename Real>
Tensor<Real>& ParameterSet<Real>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown parameter " + name);
  }
  return *entries_[it->second].tensor;
}

template <typename Real>
const Tensor<Real>& ParameterSet<Real>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown parameter " + name);
  }
  return *entries_[it->second].tensor;
}

template <typename Real>
std::size_t ParameterSet<Real>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor->size();
  return n;
}

template <typename Real>
void ParameterSet<Real>::zero_grad() {
  for (auto& e : entries_) e.tensor->zero_grad();
}

// ------------------------------------------------------------------ Tape

template <typename Real>
typename Tape<Real>::Node& Tape<Real>::push(Op op, Shape shape,
                                            std::vector<std::uint32_t> inputs) {
  Node n;
  n.op = op;
  n.shape = std::move(shape);
  n.inputs = std::move(inputs);
  for (auto id : n.inputs) n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
  if (op != Op::kInput) n.value.assign(shape_size(n.shape), Real(0));
  nodes_.push_back(std::move(n));
  return nodes_.back();
}

template <typename Real>
const typename Tape<Real>::Node& Tape<Real>::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    throw Error(ErrorCode::kState, "tape: invalid node handle");
  }
  return nodes_[v.id];
}

template <typename Real>
std::span<const Real> Tape<Real>::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  if (n.op == Op::kInput) return n.tensor->values();
  return n.value;
}

template <typename Real>
std::span<Real> Tape<Real>::sink(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return {};
  if (n.op == Op::kInput) return n.tensor->grad();
  if (n.grad.empty()) n.grad.assign(n.value.size(), Real(0));
  return n.grad;
}

template <typename Real>
Var Tape<Real>::input(Tensor<Real>& tensor) {
  auto it = inputs_.find(&tensor);
  if (it != inputs_.end()) return Var{it->second};
  Node n;
  n.op = Op::kInput;
  n.shape = tensor.shape();
  n.tensor = &tensor;
  n.needs_grad = tensor.requires_grad();
  nodes_.push_back(std::move(n));
  auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  inputs_.emplace(&tensor, id);
  return Var{id};
}

template <typename Real>
Var Tape<Real>::constant(std::vector<Real> values) {
  if (values.empty()) throw Error(ErrorCode::kShape, "constant: empty value");
  Node& n = push(Op::kConstant, Shape{values.size()}, {});
  n.value = std::move(values);
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::zeros(std::size_t n) {
  return constant(std::vector<Real>(n, Real(0)));
}

template <typename Real>
Var Tape<Real>::lookup(Tensor<Real>& table, std::size_t row) {
  if (table.rank() != 2) {
    throw ShapeError("lookup", table.shape(), Shape{row});
  }
  if (row >= table.rows()) {
    throw Error(ErrorCode::kShape, "lookup: row " + std::to_string(row) +
                                       " out of range for " +
                                       shape_str(table.shape()));
  }
  Node& n = push(Op::kLookup, Shape{table.cols()}, {});
  n.tensor = &table;
  n.index = row;
  n.needs_grad = table.requires_grad();
  auto src = table.row(row);
  std::copy(src.begin(), src.end(), n.value.begin());
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::matvec(Var m, Var x) {
  const Shape& ms = node(m).shape;
  const Shape& xs = node(x).shape;
  if (ms.size() != 2 || xs.size() != 1 || ms[1] != xs[0]) {
    throw ShapeError("matvec", ms, xs);
  }
  std::size_t rows = ms[0], cols = ms[1];
  Node& n = push(Op::kMatVec, Shape{rows}, {m.id, x.id});
  auto mv = val(m.id);
  auto xv = val(x.id);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* w = mv.data() + r * cols;
    Real acc = 0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * xv[c];
    n.value[r] = acc;
  }
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::affine(std::initializer_list<std::pair<Var, Var>> terms,
                       Var bias) {
  const Shape& bs = node(bias).shape;
  if (bs.size() != 1) throw ShapeError("affine", bs, bs);
  std::size_t rows = bs[0];
  std::vector<std::uint32_t> ins;
  for (const auto& [m, x] : terms) {
    const Shape& ms = node(m).shape;
    const Shape& xs = node(x).shape;
    if (ms.size() != 2 || xs.size() != 1 || ms[1] != xs[0]) {
      throw ShapeError("affine", ms, xs);
    }
    if (ms[0] != rows) throw ShapeError("affine", ms, bs);
    ins.push_back(m.id);
    ins.push_back(x.id);
  }
  ins.push_back(bias.id);
  Node& n = push(Op::kAffine, Shape{rows}, std::move(ins));
  auto bv = val(bias.id);
  std::copy(bv.begin(), bv.end(), n.value.begin());
  for (const auto& [m, x] : terms) {
    auto mv = val(m.id);
    auto xv = val(x.id);
    std::size_t cols = xv.size();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* w = mv.data() + r * cols;
      Real acc = 0;
      for (std::size_t c = 0; c < cols; ++c) acc += w[c] * xv[c];
      n.value[r] += acc;
    }
  }
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::add(Var a, Var b) {
  const Shape& as = node(a).shape;
  const Shape& bs = node(b).shape;
  if (as != bs) throw ShapeError("add", as, bs);
  Node& n = push(Op::kAdd, as, {a.id, b.id});
  auto av = val(a.id);
  auto bv = val(b.id);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = av[i] + bv[i];
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::mul(Var a, Var b) {
  const Shape& as = node(a).shape;
  const Shape& bs = node(b).shape;
  if (as != bs) throw ShapeError("mul", as, bs);
  Node& n = push(Op::kMul, as, {a.id, b.id});
  auto av = val(a.id);
  auto bv = val(b.id);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = av[i] * bv[i];
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::scale(Var a, Real factor) {
  Node& n = push(Op::kScale, node(a).shape, {a.id});
  n.factor = factor;
  auto av = val(a.id);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = av[i] * factor;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::scale_by(Var a, Var s) {
  const Shape& ss = node(s).shape;
  if (ss.size() != 1 || ss[0] != 1) throw ShapeError("scale_by", node(a).shape, ss);
  Node& n = push(Op::kScaleBy, node(a).shape, {a.id, s.id});
  auto av = val(a.id);
  Real f = val(s.id)[0];
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = av[i] * f;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::dot(Var a, Var b) {
  const Shape& as = node(a).shape;
  const Shape& bs = node(b).shape;
  if (as.size() != 1 || as != bs) throw ShapeError("dot", as, bs);
  Node& n = push(Op::kDot, Shape{1}, {a.id, b.id});
  auto av = val(a.id);
  auto bv = val(b.id);
  Real acc = 0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  n.value[0] = acc;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::concat(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShape, "concat: no operands");
  std::vector<std::uint32_t> ins;
  std::size_t total = 0;
  for (Var p : parts) {
    const Shape& ps = node(p).shape;
    if (ps.size() != 1) throw ShapeError("concat", ps, Shape{total});
    total += ps[0];
    ins.push_back(p.id);
  }
  Node& n = push(Op::kConcat, Shape{total}, std::move(ins));
  std::size_t off = 0;
  for (Var p : parts) {
    auto pv = val(p.id);
    std::copy(pv.begin(), pv.end(), n.value.begin() + off);
    off += pv.size();
  }
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::sum(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShape, "sum: empty operand set");
  const Shape& first = node(parts[0]).shape;
  std::vector<std::uint32_t> ins;
  for (Var p : parts) {
    if (node(p).shape != first) throw ShapeError("sum", first, node(p).shape);
    ins.push_back(p.id);
  }
  Node& n = push(Op::kSum, first, std::move(ins));
  if (parts.size() <= 2) {
    for (Var p : parts) {
      auto pv = val(p.id);
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += pv[i];
    }
  } else {
    // Addends are accumulated in sorted order so the result is bitwise
    // independent of the order of parts.
    std::vector<Real> column(parts.size());
    for (std::size_t i = 0; i < n.value.size(); ++i) {
      for (std::size_t k = 0; k < parts.size(); ++k) column[k] = val(parts[k].id)[i];
      std::sort(column.begin(), column.end());
      for (Real x : column) n.value[i] += x;
    }
  }
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::reduce_sum(Var a) {
  node(a);
  Node& n = push(Op::kReduceSum, Shape{1}, {a.id});
  auto av = val(a.id);
  n.value[0] = std::accumulate(av.begin(), av.end(), Real(0));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::sigmoid(Var a) {
  Node& n = push(Op::kSigmoid, node(a).shape, {a.id});
  auto av = val(a.id);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = sigmoid_of(av[i]);
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::tanh(Var a) {
  Node& n = push(Op::kTanh, node(a).shape, {a.id});
  auto av = val(a.id);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::tanh(av[i]);
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::relu(Var a) {
  Node& n = push(Op::kRelu, node(a).shape, {a.id});
  auto av = val(a.id);
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    bool on = av[i] > 0;
    n.value[i] = on ? av[i] : Real(0);
    relu_hash_ = (relu_hash_ ^ (on ? 0x9eu : 0x3bu)) * 1099511628211ull;
  }
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::dropout(Var a, Real rate, Rng& rng) {
  if (!(rate >= 0) || rate >= 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "dropout: rate must lie in [0,1), got " + std::to_string(rate));
  }
  if (rate == 0) return a;
  Node& n = push(Op::kDropout, node(a).shape, {a.id});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Real keep = Real(1) / (Real(1) - rate);
  n.aux.resize(n.value.size());
  auto av = val(a.id);
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.aux[i] = unif(rng) < rate ? Real(0) : keep;
    n.value[i] = av[i] * n.aux[i];
  }
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::softmax(Var z) {
  const Shape& zs = node(z).shape;
  if (zs.size() != 1) throw ShapeError("softmax", zs, Shape{0});
  Node& n = push(Op::kSoftmax, zs, {z.id});
  auto zv = val(z.id);
  Real mx = *std::max_element(zv.begin(), zv.end());
  Real total = 0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    n.value[i] = std::exp(zv[i] - mx);
    total += n.value[i];
  }
  for (auto& p : n.value) p /= total;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
Var Tape<Real>::cross_entropy(Var probs, std::size_t cls) {
  const Shape& ps = node(probs).shape;
  if (ps.size() != 1 || cls >= ps[0]) {
    throw ShapeError("cross_entropy", ps, Shape{cls + 1});
  }
  Node& n = push(Op::kCrossEntropy, Shape{1}, {probs.id});
  n.index = cls;
  n.value[0] = -std::log(std::max(val(probs.id)[cls], kProbFloor<Real>));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
void Tape<Real>::backward(Var loss) {
  const Node& ln = node(loss);
  if (ln.shape.size() != 1 || ln.shape[0] != 1) {
    throw Error(ErrorCode::kShape,
                "backward: loss must be scalar, got " + shape_str(ln.shape));
  }
  for (auto& n : nodes_) n.grad.clear();
  if (!ln.needs_grad) return;
  if (ln.op == Op::kInput) {
    nodes_[loss.id].tensor->grad()[0] += Real(1);
    return;
  }
  nodes_[loss.id].grad.assign(1, Real(1));
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    propagate(n);
  }
}

template <typename Real>
void Tape<Real>::propagate(Node& n) {
  const std::vector<Real>& g = n.grad;
  switch (n.op) {
    case Op::kInput:
    case Op::kConstant:
      break;
    case Op::kLookup: {
      auto dst = n.tensor->grad().subspan(n.index * n.tensor->cols(),
                                          n.tensor->cols());
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      break;
    }
    case Op::kMatVec:
    case Op::kAffine: {
      std::size_t rows = n.value.size();
      std::size_t pairs = n.op == Op::kMatVec ? 1 : (n.inputs.size() - 1) / 2;
      for (std::size_t k = 0; k < pairs; ++k) {
        std::uint32_t mid = n.inputs[2 * k];
        std::uint32_t xid = n.inputs[2 * k + 1];
        auto mv = val(mid);
        auto xv = val(xid);
        std::size_t cols = xv.size();
        auto dm = sink(mid);
        auto dx = sink(xid);
        for (std::size_t r = 0; r < rows; ++r) {
          Real gr = g[r];
          if (gr == Real(0)) continue;
          if (!dm.empty()) {
            Real* drow = dm.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) drow[c] += gr * xv[c];
          }
          if (!dx.empty()) {
            const Real* w = mv.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) dx[c] += gr * w[c];
          }
        }
      }
      if (n.op == Op::kAffine) {
        auto db = sink(n.inputs.back());
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[i];
      }
      break;
    }
    case Op::kAdd: {
      for (std::uint32_t id : n.inputs) {
        auto d = sink(id);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
      }
      break;
    }
    case Op::kMul: {
      auto av = val(n.inputs[0]);
      auto bv = val(n.inputs[1]);
      auto da = sink(n.inputs[0]);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * bv[i];
      auto db = sink(n.inputs[1]);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[i] * av[i];
      break;
    }
    case Op::kScale: {
      auto d = sink(n.inputs[0]);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * n.factor;
      break;
    }
    case Op::kScaleBy: {
      auto av = val(n.inputs[0]);
      Real f = val(n.inputs[1])[0];
      auto da = sink(n.inputs[0]);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * f;
      auto ds = sink(n.inputs[1]);
      if (!ds.empty()) {
        Real acc = 0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
        ds[0] += acc;
      }
      break;
    }
    case Op::kDot: {
      auto av = val(n.inputs[0]);
      auto bv = val(n.inputs[1]);
      auto da = sink(n.inputs[0]);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[0] * bv[i];
      auto db = sink(n.inputs[1]);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[0] * av[i];
      break;
    }
    case Op::kConcat: {
      std::size_t off = 0;
      for (std::uint32_t id : n.inputs) {
        std::size_t len = nodes_[id].shape[0];
        auto d = sink(id);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[off + i];
        off += len;
      }
      break;
    }
    case Op::kSum: {
      for (std::uint32_t id : n.inputs) {
        auto d = sink(id);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
      }
      break;
    }
    case Op::kReduceSum: {
      auto d = sink(n.inputs[0]);
      for (auto& x : d) x += g[0];
      break;
    }
    case Op::kSigmoid: {
      auto d = sink(n.inputs[0]);
      for (std::size_t i = 0; i < d.size(); ++i) {
        Real y = n.value[i];
        d[i] += g[i] * y * (Real(1) - y);
      }
      break;
    }
    case Op::kTanh: {
      auto d = sink(n.inputs[0]);
      for (std::size_t i = 0; i < d.size(); ++i) {
        Real y = n.value[i];
        d[i] += g[i] * (Real(1) - y * y);
      }
      break;
    }
    case Op::kRelu: {
      auto av = val(n.inputs[0]);
      auto d = sink(n.inputs[0]);
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (av[i] > 0) d[i] += g[i];
      }
      break;
    }
    case Op::kDropout: {
      auto d = sink(n.inputs[0]);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * n.aux[i];
      break;
    }
    case Op::kSoftmax: {
      auto d = sink(n.inputs[0]);
      if (d.empty()) break;
      Real gp = 0;
      for (std::size_t i = 0; i < g.size(); ++i) gp += g[i] * n.value[i];
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += n.value[i] * (g[i] - gp);
      break;
    }
    case Op::kCrossEntropy: {
      auto d = sink(n.inputs[0]);
      if (d.empty()) break;
      Real p = std::max(val(n.inputs[0])[n.index], kProbFloor<Real>);
      d[n.index] -= g[0] / p;
      break;
    }
  }
}

template <typename Real>
std::span<const Real> Tape<Real>::value(Var v) const {
  node(v);
  return val(v.id);
}

template <typename Real>
Real Tape<Real>::scalar(Var v) const {
  auto s = value(v);
  if (s.size() != 1) {
    throw Error(ErrorCode::kShape, "scalar: node is " + shape_str(node(v).shape));
  }
  return s[0];
}

template <typename Real>
std::span<const Real> Tape<Real>::grad(Var v) const {
  return node(v).grad;
}

template <typename Real>
const Shape& Tape<Real>::shape(Var v) const {
  return node(v).shape;
}

template class Tensor<float>;
template class Tensor<double>;
template class ParameterSet<float>;
template class ParameterSet<double>;
template class Tape<float>;
template class Tape<double>;

// ------------------------------------------------------------ grad_check

namespace {

struct Probe {
  double value;
  std::uint64_t signature;
};

Probe evaluate(const std::function<Var(Tape<double>&)>& build) {
  Tape<double> tape;
  Var loss = build(tape);
  return {tape.scalar(loss), tape.activation_signature()};
}

}  // namespace

GradCheckReport grad_check(const std::function<Var(Tape<double>&)>& build,
                           ParameterSet<double>& params,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "grad_check: eps must be > 0");
  }
  params.zero_grad();
  std::uint64_t base_signature = 0;
  {
    Tape<double> tape;
    Var loss = build(tape);
    if (!std::isfinite(tape.scalar(loss))) {
      throw Error(ErrorCode::kNumeric, "grad_check: loss is not finite");
    }
    tape.backward(loss);
    base_signature = tape.activation_signature();
  }

  GradCheckReport report;
  for (auto& entry : params) {
    Tensor<double>& t = *entry.tensor;
    if (!t.requires_grad()) continue;
    auto analytic_all = t.grad();
    std::vector<double> analytic(analytic_all.begin(), analytic_all.end());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      double numeric = 0.0;
      bool smooth = false;
      // Shrink the step when a probe lands on a different ReLU piece.
      for (double eps = options.eps; eps >= options.eps * 1e-3; eps *= 0.1) {
        t[i] = saved + eps;
        Probe plus = evaluate(build);
        t[i] = saved - eps;
        Probe minus = evaluate(build);
        t[i] = saved;
        if (!std::isfinite(plus.value) || !std::isfinite(minus.value) ||
            !std::isfinite(analytic[i])) {
          throw Error(ErrorCode::kNumeric,
                      "grad_check: non-finite value at " + entry.name + "[" +
                          std::to_string(i) + "]");
        }
        if (plus.signature == base_signature &&
            minus.signature == base_signature) {
          numeric = (plus.value - minus.value) / (2.0 * eps);
          smooth = true;
          break;
        }
      }
      if (!smooth) {
        ++report.kinks_skipped;
        continue;
      }
      ++report.checked;
      double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), options.floor});
      double rel = std::abs(analytic[i] - numeric) / denom;
      if (rel > report.max_rel_error || report.worst_parameter.empty()) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_parameter = entry.name;
          report.worst_index = i;
          report.worst_analytic = analytic[i];
          report.worst_numeric = numeric;
        }
      }
    }
  }
  report.passed = report.max_rel_error <= options.tol;
  return report;
}

}  // namespace negscope::ad
