#include <doctest.h>

#include <cmath>
#include <regex>

#include "checkpoint.hpp"
#include "error.hpp"
#include "oracles.hpp"
#include "training.hpp"

using namespace negscope;

namespace {

ModelConfig tiny() {
  ModelConfig c = oracle::small_config(4);
  c.init_range = 0.1;
  return c;
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.patience = epochs;
  return t;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("defaults") {
  TrainConfig t;
  CHECK(t.learning_rate == 0.005);
  CHECK(t.beta1 == 0.9);
  CHECK(t.beta2 == 0.999);
  CHECK(t.epsilon == 1e-8);
  CHECK(t.clip_norm == 5.0);
  CHECK(t.select == SelectMetric::kF1);
  TrainConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = TrainConfig{};
  bad.patience = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("Adam matches the update rule computed by hand") {
  ad::ParameterSet<double> ps;
  auto& w = ps.add("w", {2});
  auto& frozen = ps.add("frozen", {1}, false);
  w[0] = 1.0;
  w[1] = -2.0;
  frozen[0] = 3.0;
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  Adam<double> adam(ps, cfg);

  const double g1[2] = {0.5, -4.0}, g2[2] = {-1.0, 2.0};
  double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -2.0};
  for (int t = 1; t <= 2; ++t) {
    const double* g = t == 1 ? g1 : g2;
    auto gw = w.grad();
    gw[0] = g[0];
    gw[1] = g[1];
    frozen.grad()[0] = 9.0;
    adam.step();
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      double mh = m[i] / (1 - std::pow(0.9, t));
      double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    }
    CHECK(std::as_const(w).grad()[0] == 0.0);
  }
  CHECK(frozen[0] == 3.0);
  CHECK(adam.steps() == 2);
}

TEST_CASE("global norm clipping") {
  ad::ParameterSet<double> ps;
  auto& a = ps.add("a", {1});
  auto& b = ps.add("b", {1});
  a.grad()[0] = 3.0;
  b.grad()[0] = 4.0;
  CHECK(clip_gradients(ps, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad()[0] == doctest::Approx(0.6));
  CHECK(b.grad()[0] == doctest::Approx(0.8));
  CHECK(clip_gradients(ps, 5.0) == doctest::Approx(1.0));
  CHECK(a.grad()[0] == doctest::Approx(0.6));
  CHECK(clip_gradients(ps, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("zero-initialized models start at ln 2 per token") {
  auto c = oracle::synth(SynthTask::kSubtree, 30, 4, 8, 5);
  auto inst = to_instances(c);
  for (ModelKind k : {ModelKind::kBiLstm, ModelKind::kDLstm, ModelKind::kGcn}) {
    CAPTURE(to_string(k));
    auto cfg = tiny();
    cfg.init = InitMode::kZero;
    auto m = oracle::build<double>(k, cfg, c);
    CHECK(mean_token_loss(*m, inst) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    auto tc = quick(1);
    tc.learning_rate = 1e-7;
    auto r = train_model(k, c, c, cfg, tc);
    REQUIRE(r.log.size() == 1);
    CHECK(std::fabs(r.log[0].loss - std::log(2.0)) < 1e-3);
  }
}

TEST_CASE("empty training split is an error") {
  Corpus empty;
  auto dev = oracle::synth(SynthTask::kSubtree, 3, 3, 5, 1);
  try {
    train_model(ModelKind::kDLstm, empty, dev, tiny(), quick(1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("early stopping keeps the best dev checkpoint") {
  auto train = oracle::synth(SynthTask::kSubtree, 60, 4, 7, 11);
  auto dev = oracle::synth(SynthTask::kSubtree, 30, 4, 7, 12);
  auto dev_inst = to_instances(dev);
  for (SelectMetric sel : {SelectMetric::kF1, SelectMetric::kPcs}) {
    TrainConfig tc = quick(8);
    tc.patience = 2;
    tc.select = sel;
    tc.learning_rate = 0.02;
    std::vector<std::string> lines;
    TrainInputs in;
    in.on_epoch = [&](const std::string& l) { lines.push_back(l); };
    auto r = train_model(ModelKind::kBiLstm, train, dev, tiny(), tc, in);
    REQUIRE(!r.log.empty());
    CHECK(lines.size() == r.log.size());
    double best = -1;
    for (const auto& e : r.log) best = std::max(best, sel == SelectMetric::kF1 ? e.dev_f1 : e.dev_pcs);
    CHECK(r.best_metric == best);
    auto rep = evaluate(dev_inst, scopes_from_probabilities(predict_instances(*r.model, dev_inst)));
    CHECK((sel == SelectMetric::kF1 ? rep.prf.f1 : rep.pcs) == doctest::Approx(best).epsilon(1e-12));
    if (r.log.size() < tc.max_epochs) CHECK(r.log.size() - r.best_epoch == tc.patience);
    std::regex line(R"(epoch \d+ loss \d+\.\d+ dev_f1 \d+\.\d+ dev_pcs \d+\.\d+)");
    for (const auto& l : lines) CHECK(std::regex_match(l, line));
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto train = oracle::synth(SynthTask::kWindow, 20, 3, 6, 2);
  auto a = train_model(ModelKind::kGcn, train, train, tiny(), quick(2));
  auto b = train_model(ModelKind::kGcn, train, train, tiny(), quick(2));
  CHECK(checkpoint_json(*a.model) == checkpoint_json(*b.model));
  auto tc = quick(2);
  tc.seed = 99;
  auto cfg = tiny();
  cfg.seed = 99;
  auto d = train_model(ModelKind::kGcn, train, train, cfg, tc);
  CHECK(checkpoint_json(*d.model) != checkpoint_json(*a.model));
}

TEST_CASE("empty dev falls back to train") {
  auto train = oracle::synth(SynthTask::kSubtree, 10, 3, 5, 2);
  auto r = train_model(ModelKind::kDLstm, train, Corpus{}, tiny(), quick(1));
  CHECK(r.log.size() == 1);
}

TEST_CASE("frozen word vectors do not move") {
  auto train = oracle::synth(SynthTask::kSubtree, 10, 3, 5, 2);
  auto words = corpus_vocabulary(train);
  std::string text;
  for (const auto& w : words) text += w + " 0.5 -0.5 0.25\n";
  auto table = parse_vectors(text);
  TrainInputs in;
  in.word_vectors = &table;
  in.freeze_words = true;
  auto r = train_model(ModelKind::kBiLstm, train, train, tiny(), quick(2), in);
  const auto& emb = r.model->params().at("emb.word");
  CHECK_FALSE(emb.requires_grad());
  CHECK(emb.row(0)[0] == 0.5f);
  CHECK(emb.row(0)[2] == 0.25f);
}

TEST_CASE("ablation grid has every cell") {
  auto train = oracle::synth(SynthTask::kWindow, 12, 3, 5, 4);
  auto r = ablate_grid(train, train, train, tiny(), quick(1), {}, 2);
  CHECK(r.masks[1] == "-w");
  CHECK(r.masks[2] == "-p");
  for (const auto& row : r.cells)
    for (const auto& cell : row) {
      CHECK(cell.prf.f1 >= 0.0);
      CHECK(cell.prf.f1 <= 100.0);
    }
  auto text = format_ablation(r, false);
  CHECK(text.find("-w") != std::string::npos);
  auto tsv = format_ablation(r, true);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') >= 9);
  CHECK(ablation_mask(1).word == false);
  CHECK(ablation_mask(2).pos == false);
  CHECK_THROWS_AS(ablation_mask(3), Error);
}

}  // TEST_SUITE
