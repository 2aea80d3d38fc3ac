#pragma once

// Reverse-mode automatic differentiation over per-instance tapes.
//
// A Tape records primitive operations in construction order; inputs always
// precede their consumers, so backward() is a single reverse sweep. External
// tensors (parameters, test variables) enter the tape through input() or
// lookup() and receive gradients directly in their own gradient buffers.
//
// Two precisions are instantiated: float for training and double for
// finite-difference gradient checks.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "error.hpp"

namespace negscope {

using Rng = std::mt19937_64;

namespace ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

// Raised when operands do not conform. Names the primitive and both shapes.
class ShapeError : public Error {
 public:
  ShapeError(const std::string& primitive, const Shape& lhs, const Shape& rhs)
      : Error(ErrorCode::kShape, primitive + ": shape mismatch " +
                                     shape_str(lhs) + " vs " + shape_str(rhs)),
        primitive_(primitive),
        lhs_(lhs),
        rhs_(rhs) {}

  const std::string& primitive() const noexcept { return primitive_; }
  const Shape& lhs() const noexcept { return lhs_; }
  const Shape& rhs() const noexcept { return rhs_; }

 private:
  std::string primitive_;
  Shape lhs_, rhs_;
};

template <typename Real>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const noexcept { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<Real> values() noexcept { return values_; }
  std::span<const Real> values() const noexcept { return values_; }
  Real& operator[](std::size_t i) { return values_[i]; }
  Real operator[](std::size_t i) const { return values_[i]; }

  std::span<Real> row(std::size_t r) {
    return std::span<Real>(values_).subspan(r * cols(), cols());
  }
  std::span<const Real> row(std::size_t r) const {
    return std::span<const Real>(values_).subspan(r * cols(), cols());
  }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool on) noexcept { requires_grad_ = on; }

  bool has_grad() const noexcept { return !grad_.empty(); }
  // Allocates a zero buffer of identical shape on first use.
  std::span<Real> grad();
  // Empty span when never allocated.
  std::span<const Real> grad() const noexcept { return grad_; }
  void zero_grad();

 private:
  Shape shape_;
  std::vector<Real> values_;
  std::vector<Real> grad_;
  bool requires_grad_ = false;
};

// Named tensors in insertion order. Addresses are stable for the lifetime of
// the set, so models keep plain references into it.
template <typename Real>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    std::unique_ptr<Tensor<Real>> tensor;
  };

  ParameterSet() = default;
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  Tensor<Real>& add(const std::string& name, Shape shape,
                    bool trainable = true);
  // Replaces the tensor stored under name (shape may differ).
  Tensor<Real>& reset(const std::string& name, Tensor<Real> tensor);

  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }
  Tensor<Real>& at(const std::string& name);
  const Tensor<Real>& at(const std::string& name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.cbegin(); }
  auto end() const { return entries_.cend(); }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Handle to a node on a tape.
struct Var {
  static constexpr std::uint32_t kNone = 0xffffffffu;
  std::uint32_t id = kNone;
  bool valid() const noexcept { return id != kNone; }
};

template <typename Real>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var input(Tensor<Real>& tensor);
  Var constant(std::vector<Real> values);
  Var zeros(std::size_t n);
  Var lookup(Tensor<Real>& table, std::size_t row);

  // Linear algebra.
  Var matvec(Var matrix, Var x);
  // sum_k M_k x_k + bias, fused into one node.
  Var affine(std::initializer_list<std::pair<Var, Var>> terms, Var bias);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, Real factor);
  // a * s for a scalar node s.
  Var scale_by(Var a, Var s);
  Var dot(Var a, Var b);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }
  Var sum(std::span<const Var> parts);
  Var sum(std::initializer_list<Var> parts) {
    return sum(std::span<const Var>(parts.begin(), parts.size()));
  }
  Var reduce_sum(Var a);

  // Nonlinearities.
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);

  // Inverted dropout: each element kept with probability 1-rate and scaled by
  // 1/(1-rate). Callers skip this at evaluation time.
  Var dropout(Var a, Real rate, Rng& rng);

  Var softmax(Var z);
  // -log(probs[cls]); probs is normally a softmax output.
  Var cross_entropy(Var probs, std::size_t cls);

  // Propagates d(loss)/d(.) to every reachable node. Gradients of external
  // tensors accumulate across calls; node gradients are recomputed.
  void backward(Var loss);

  std::span<const Real> value(Var v) const;
  Real scalar(Var v) const;
  // Node gradient from the last backward(); empty for leaves and for nodes
  // that were not reached.
  std::span<const Real> grad(Var v) const;
  const Shape& shape(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  // Hash of the sign pattern of every ReLU input seen so far. Two evaluations
  // with equal signatures lie on the same linear piece.
  std::uint64_t activation_signature() const noexcept { return relu_hash_; }

 private:
  enum class Op : std::uint8_t {
    kInput,
    kConstant,
    kLookup,
    kMatVec,
    kAffine,
    kAdd,
    kMul,
    kScale,
    kScaleBy,
    kDot,
    kConcat,
    kSum,
    kReduceSum,
    kSigmoid,
    kTanh,
    kRelu,
    kDropout,
    kSoftmax,
    kCrossEntropy,
  };

  struct Node {
    Op op;
    Shape shape;
    std::vector<std::uint32_t> inputs;
    std::vector<Real> value;  // empty for kInput: the tensor owns it
    std::vector<Real> grad;   // allocated during backward
    std::vector<Real> aux;    // dropout mask
    Tensor<Real>* tensor = nullptr;
    std::size_t index = 0;
    Real factor = 0;
    bool needs_grad = false;
  };

  Node& push(Op op, Shape shape, std::vector<std::uint32_t> inputs);
  const Node& node(Var v) const;
  std::span<const Real> val(std::uint32_t id) const;
  // Gradient sink for node id, or empty span when it takes no gradient.
  std::span<Real> sink(std::uint32_t id);
  void propagate(Node& n);

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor<Real>*, std::uint32_t> inputs_;
  std::uint64_t relu_hash_ = 1469598103934665603ull;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  // Gradients smaller than this are compared in absolute terms: the
  // relative error denominator is max(|analytic|, |numeric|, floor).
  double floor = 1e-5;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  // Coordinates whose +-eps probes crossed a ReLU kink at every step size
  // tried; excluded from the maximum.
  std::size_t kinks_skipped = 0;
  bool passed = false;
};

// Builds a fresh tape with `build` and compares backward() against central
// differences for every trainable scalar in params.
GradCheckReport grad_check(const std::function<Var(Tape<double>&)>& build,
                           ParameterSet<double>& params,
                           const GradCheckOptions& options = {});

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace ad
}  // namespace negscope
