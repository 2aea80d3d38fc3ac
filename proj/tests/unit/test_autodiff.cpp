#include <doctest.h>

#include <cmath>
#include <numeric>

#include "autodiff.hpp"

using namespace negscope;
using namespace negscope::ad;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(shape, true);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("affine forward matches hand computation") {
  Tensor<double> M({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor<double> x({3}, {1, -1, 2});
  Tensor<double> b({2}, {0.5, -0.5});
  Tape<double> tape;
  Var y = tape.affine({{tape.input(M), tape.input(x)}}, tape.input(b));
  auto v = tape.value(y);
  CHECK(v[0] == doctest::Approx(1 - 2 + 6 + 0.5));
  CHECK(v[1] == doctest::Approx(4 - 5 + 12 - 0.5));
}

TEST_CASE("shape mismatch names the primitive and both shapes") {
  Tensor<double> M({2, 3});
  Tensor<double> x({4});
  Tape<double> tape;
  try {
    tape.matvec(tape.input(M), tape.input(x));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(e.primitive() == "matvec");
    CHECK(e.lhs() == Shape{2, 3});
    CHECK(e.rhs() == Shape{4});
    CHECK(std::string(e.what()).find("matvec") != std::string::npos);
  }
}

TEST_CASE("backward of a non-scalar is rejected") {
  Tensor<double> x({3}, {1, 2, 3}, true);
  Tape<double> tape;
  Var y = tape.tanh(tape.input(x));
  CHECK_THROWS_AS(tape.backward(y), Error);
}

TEST_CASE("sum of an empty set is an error") {
  Tape<double> tape;
  std::vector<Var> none;
  CHECK_THROWS_AS(tape.sum(none), Error);
}

TEST_CASE("every primitive passes a finite-difference check") {
  Rng rng(7);
  ParameterSet<double> ps;
  auto& M = ps.add("M", {3, 4});
  auto& N = ps.add("N", {3, 3});
  auto& x = ps.add("x", {4});
  auto& y = ps.add("y", {3});
  auto& b = ps.add("b", {3});
  auto& table = ps.add("table", {5, 3});
  for (auto& e : ps) {
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& v : e.tensor->values()) v = u(rng);
  }
  auto build = [&](Tape<double>& t) {
    Var h = t.affine({{t.input(M), t.input(x)}, {t.input(N), t.input(y)}}, t.input(b));
    Var a = t.sigmoid(h);
    Var c = t.tanh(t.matvec(t.input(N), a));
    Var r = t.relu(t.add(c, t.lookup(table, 2)));
    Var m = t.mul(r, t.scale(a, 0.7));
    Var s = t.scale_by(m, t.dot(a, c));
    Var cat = t.concat({s, t.lookup(table, 4)});
    Var z = t.sum({t.reduce_sum(cat), t.dot(c, c)});
    Var logits = t.concat({z, t.reduce_sum(a)});
    Var p = t.softmax(logits);
    return t.cross_entropy(p, 1);
  };
  auto report = grad_check(build, ps);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-6);
  CHECK(report.checked == ps.scalar_count() - report.kinks_skipped);
}

TEST_CASE("dropout with fixed seed is differentiable and inverted") {
  Rng rng(3);
  ParameterSet<double> ps;
  auto& x = ps.add("x", {50});
  for (auto& v : x.values()) v = 1.0;
  auto build = [&](Tape<double>& t) {
    Rng mask(11);
    return t.reduce_sum(t.dropout(t.tanh(t.input(x)), 0.3, mask));
  };
  CHECK(grad_check(build, ps).passed);

  Tape<double> t;
  Rng mask(5);
  auto out = t.value(t.dropout(t.input(x), 0.25, mask));
  for (double v : out) CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
}

TEST_CASE("dropout rate 0 is the identity and invalid rates are rejected") {
  Tensor<double> x({3}, {1, 2, 3});
  Rng rng(1);
  Tape<double> t;
  Var in = t.input(x);
  CHECK(t.dropout(in, 0.0, rng).id == in.id);
  CHECK_THROWS_AS(t.dropout(in, 1.0, rng), Error);
  CHECK_THROWS_AS(t.dropout(in, -0.1, rng), Error);
}

TEST_CASE("softmax sums to one and cross-entropy matches -log p") {
  Tensor<double> z({3}, {0.2, -1.0, 3.0});
  Tape<double> t;
  Var p = t.softmax(t.input(z));
  auto v = t.value(p);
  CHECK(std::accumulate(v.begin(), v.end(), 0.0) == doctest::Approx(1.0));
  double denom = std::exp(0.2) + std::exp(-1.0) + std::exp(3.0);
  CHECK(v[2] == doctest::Approx(std::exp(3.0) / denom));
  CHECK(t.scalar(t.cross_entropy(p, 0)) == doctest::Approx(-std::log(std::exp(0.2) / denom)));
}

TEST_CASE("tensor gradients accumulate across backward calls") {
  Tensor<double> x({2}, {1.0, 2.0}, true);
  for (int round = 0; round < 2; ++round) {
    Tape<double> t;
    t.backward(t.dot(t.input(x), t.input(x)));
  }
  auto g = std::as_const(x).grad();
  CHECK(g[0] == doctest::Approx(4.0));
  CHECK(g[1] == doctest::Approx(8.0));
  x.zero_grad();
  CHECK(std::as_const(x).grad()[0] == 0.0);
}

TEST_CASE("non-trainable tensors receive no gradient") {
  Tensor<double> w({2}, {1.0, 2.0}, false);
  Tensor<double> x({2}, {3.0, 4.0}, true);
  Tape<double> t;
  t.backward(t.dot(t.input(w), t.input(x)));
  CHECK_FALSE(w.has_grad());
  CHECK(std::as_const(x).grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("grad_check reports relu kinks instead of failing") {
  ParameterSet<double> ps;
  auto& x = ps.add("x", {2});
  x[0] = 0.0;  // exactly on the kink
  x[1] = 0.5;
  auto build = [&](Tape<double>& t) { return t.reduce_sum(t.relu(t.input(x))); };
  auto report = grad_check(build, ps);
  CHECK(report.kinks_skipped == 1);
  CHECK(report.checked == 1);
  CHECK(report.passed);
}

TEST_CASE("grad_check detects a wrong gradient") {
  // A parameter that reaches the loss only through a non-trainable copy gets
  // a zero analytic gradient while the numeric one is not zero.
  ParameterSet<double> ps;
  auto& x = ps.add("x", {1});
  x[0] = 0.3;
  auto build = [&](Tape<double>& t) {
    return t.reduce_sum(t.constant({x[0] * x[0] * 10.0}));
  };
  auto report = grad_check(build, ps);
  CHECK_FALSE(report.passed);
  CHECK(report.worst_parameter == "x");
  CHECK(report.worst_numeric == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("parameter set keeps addresses across reset") {
  ParameterSet<float> ps;
  auto& a = ps.add("a", {2, 2});
  auto* addr = &a;
  ps.add("b", {3});
  auto& r = ps.reset("a", Tensor<float>({3, 1}, {1, 2, 3}, true));
  CHECK(&r == addr);
  CHECK(ps.at("a").shape() == Shape{3, 1});
  CHECK(ps.scalar_count() == 6);
  CHECK_THROWS(ps.add("b", {1}));
}

TEST_CASE("float and double tapes agree") {
  Rng rng(9);
  auto Md = random_tensor({4, 4}, rng);
  auto xd = random_tensor({4}, rng);
  Tensor<float> Mf(Md.shape());
  Tensor<float> xf(xd.shape());
  for (std::size_t i = 0; i < Md.size(); ++i) Mf[i] = static_cast<float>(Md[i]);
  for (std::size_t i = 0; i < xd.size(); ++i) xf[i] = static_cast<float>(xd[i]);
  Tape<double> td;
  Tape<float> tf;
  double a = td.scalar(td.reduce_sum(td.tanh(td.matvec(td.input(Md), td.input(xd)))));
  float b = tf.scalar(tf.reduce_sum(tf.tanh(tf.matvec(tf.input(Mf), tf.input(xf)))));
  CHECK(a == doctest::Approx(b).epsilon(1e-5));
}

}  // TEST_SUITE
