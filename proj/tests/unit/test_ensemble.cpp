#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ensemble.hpp"
#include "error.hpp"
#include "oracles.hpp"

using namespace negscope;

namespace {

std::string temp_file(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / ("negscope_ens_" + name);
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("confidence vote examples") {
  std::vector<ProbPair> a = {{0.6, 0.4}, {0.3, 0.7}, {0.2, 0.8}};
  std::vector<ProbPair> b = {{0.1, 0.9}, {0.3, 0.7}, {0.4, 0.6}};
  auto v = confidence_vote(a, b);
  CHECK(v.winner[0] == 1);
  CHECK(v.label[0] == 1);
  CHECK(v.margin[0] == doctest::Approx(0.8));
  CHECK(v.winner[1] == 0);
  CHECK(v.label[1] == 1);
  CHECK(v.winner[2] == 0);
  CHECK(v.label[2] == 1);
}

TEST_CASE("tie between opposite labels goes to the first model") {
  std::vector<ProbPair> a = {{0.7, 0.3}};
  std::vector<ProbPair> b = {{0.3, 0.7}};
  CHECK(confidence_vote(a, b).label[0] == 0);
  CHECK(confidence_vote(b, a).label[0] == 1);
}

TEST_CASE("argmax ties count as out of scope") {
  CHECK(argmax_label({0.5, 0.5}) == 0);
}

TEST_CASE("length mismatch") {
  std::vector<ProbPair> a(2), b(3);
  CHECK_THROWS_AS(confidence_vote(a, b), Error);
}

TEST_CASE("voting algebra on random pairs") {
  CHECK(oracle::voting_violations(1000, 1) == 0);
  CHECK(oracle::voting_violations(1000, 2) == 0);
}

TEST_CASE("probability and label files round trip") {
  std::vector<ProbabilityRecord> a = {{"s1", 0, 1, 0.25, 0.75}, {"s1", 0, 2, 0.9, 0.1}};
  std::vector<ProbabilityRecord> b = {{"s1", 0, 1, 0.45, 0.55}, {"s1", 0, 2, 0.2, 0.8}};
  auto pa = temp_file("a.tsv", "");
  auto pb = temp_file("b.tsv", "");
  write_probabilities(a, pa);
  write_probabilities(b, pb);
  auto back = read_probabilities(pa);
  REQUIRE(back.size() == 2);
  CHECK(back[0].p_in == 0.75);
  CHECK(back[1].token == 2);

  auto labels = vote_records(read_probabilities(pa), read_probabilities(pb));
  CHECK(labels[0].label == 1);
  CHECK(labels[0].winner == 'A');
  CHECK(labels[1].label == 0);
  CHECK(labels[1].winner == 'A');
  auto pl = temp_file("l.tsv", "");
  write_labels(labels, pl);
  auto lb = read_labels(pl);
  CHECK(lb[1].margin == doctest::Approx(0.8));
  CHECK(read_predictions(pl)[0].label == 1);
  CHECK(read_predictions(pa)[1].label == 0);

  auto short_b = b;
  short_b.pop_back();
  CHECK_THROWS_AS(vote_records(a, short_b), Error);
  auto shifted = b;
  shifted[1].token = 3;
  CHECK_THROWS_AS(vote_records(a, shifted), Error);
  for (auto p : {pa, pb, pl}) std::filesystem::remove(p);
}

TEST_CASE("malformed rows are parse errors") {
  auto p = temp_file("bad.tsv", "s1\t0\t1\tx\t0.5\n");
  CHECK_THROWS_AS(read_probabilities(p), ParseError);
  auto q = temp_file("bad2.tsv", "s1\t0\t1\t2\tA\t0.5\n");
  CHECK_THROWS_AS(read_labels(q), ParseError);
  auto r = temp_file("bad3.tsv", "s1\t0\t1\t1\tC\t0.5\n");
  CHECK_THROWS_AS(read_labels(r), ParseError);
  for (auto f : {p, q, r}) std::filesystem::remove(f);
}

}  // TEST_SUITE
