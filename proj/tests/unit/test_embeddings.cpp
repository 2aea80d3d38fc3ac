#include <doctest.h>

#include <cmath>
#include <random>

#include "embeddings.hpp"
#include "error.hpp"
#include "fixtures.hpp"

using namespace negscope;

TEST_SUITE("embeddings") {

TEST_CASE("vector files") {
  SUBCASE("two words of dimension 3") {
    auto t = parse_vectors("a 1 2 3\nb 4 5 6\n");
    CHECK(t.dim == 3);
    CHECK(t.vocab.size() == 2);
    CHECK(t.rows() == 3);
    CHECK(t.lookup("b")[1] == 5.0f);
    for (float v : t.lookup("zzz")) CHECK(v == 0.0f);
  }
  SUBCASE("empty file has only the UNK row") {
    auto t = parse_vectors("");
    CHECK(t.vocab.size() == 0);
    CHECK(t.rows() == 1);
  }
  SUBCASE("duplicate word keeps the last vector") {
    auto t = parse_vectors("not 1 1\nno 2 2\nnot 3 3\n");
    CHECK(t.vocab.size() == 2);
    CHECK(t.lookup("not")[0] == 3.0f);
  }
  SUBCASE("count/dim header is skipped") {
    auto t = parse_vectors("2 2\na 1 0\nb 0 1\n");
    CHECK(t.vocab.size() == 2);
    CHECK_FALSE(t.contains("2"));
  }
  SUBCASE("inconsistent dimension reports its line") {
    try {
      parse_vectors("a 1 2 3\nb 4 5\n", "v.txt");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("translation tables") {
  auto t = parse_translation_table("你\tyour\t0.1\n你\tyou\t0.9\n不\tnot\t1.0\n");
  auto* ni = t.find("你");
  REQUIRE(ni != nullptr);
  REQUIRE(ni->size() == 2);
  CHECK((*ni)[0].target == "you");
  CHECK((*ni)[0].prob == doctest::Approx(0.9));
  CHECK((*ni)[1].target == "your");
  REQUIRE(t.find("不")->size() == 1);
  CHECK(t.find("好") == nullptr);
  CHECK_THROWS_AS(parse_translation_table("a\tb\t1.5\n"), ParseError);
  CHECK_THROWS_AS(parse_translation_table("a\tb\n"), ParseError);
}

TEST_CASE("composition methods") {
  auto vec = parse_vectors("you 1 0\nyour 0 1\nnot 0.5 0.5\n");
  auto tr = parse_translation_table("你\tyou\t0.9\n你\tyour\t0.1\n不\tnot\t1.0\n");
  std::vector<std::string> src = {"你", "不", "好"};

  auto argmax = compose_crosslingual(ComposeMethod::kArgmax, src, vec, &tr);
  CHECK(argmax.table.lookup("你")[0] == 1.0f);
  CHECK(argmax.table.lookup("你")[1] == 0.0f);
  CHECK(argmax.covered == 2);
  CHECK(argmax.total == 3);

  auto avg = compose_crosslingual(ComposeMethod::kAverage, src, vec, &tr);
  CHECK(avg.table.lookup("你")[0] == doctest::Approx(0.9));
  CHECK(avg.table.lookup("你")[1] == doctest::Approx(0.1));
  CHECK(avg.table.lookup("不")[0] == doctest::Approx(0.5));
  CHECK(argmax.table.lookup("不")[0] == avg.table.lookup("不")[0]);
  for (float v : avg.table.lookup("好")) CHECK(v == 0.0f);

  auto uni = compose_crosslingual(ComposeMethod::kAverage, src, vec, &tr, true);
  CHECK(uni.table.lookup("你")[0] == doctest::Approx(0.5));

  auto pre = compose_crosslingual(ComposeMethod::kPremapped, {"you", "xx"}, vec, nullptr);
  CHECK(pre.table.lookup("you")[0] == 1.0f);
  CHECK(pre.coverage() == doctest::Approx(0.5));

  CHECK_THROWS_AS(compose_crosslingual(ComposeMethod::kAverage, src, vec, nullptr), Error);
  CHECK(parse_compose_method("b") == ComposeMethod::kAverage);
  CHECK_THROWS_AS(parse_compose_method("mean"), Error);
}

TEST_CASE("average renormalizes over translations present in the table") {
  auto vec = parse_vectors("you 2 0\n");
  auto tr = parse_translation_table("你\tyou\t0.3\n你\tthou\t0.7\n");
  auto avg = compose_crosslingual(ComposeMethod::kAverage, {"你"}, vec, &tr);
  CHECK(avg.table.lookup("你")[0] == doctest::Approx(2.0));
  auto am = compose_crosslingual(ComposeMethod::kArgmax, {"你"}, vec, &tr);
  CHECK(am.table.lookup("你")[0] == doctest::Approx(2.0));
}

TEST_CASE("input encoder widths and cue locality") {
  auto c = fixtures::parse(fixtures::kDrive);
  Vocabulary words, tags, labels;
  for (const auto& t : c.sentences[0].tokens) {
    words.add(t.form);
    tags.add(t.upos);
    labels.add(t.deprel);
  }
  EmbeddingDims dims{4, 2, 3, 3};
  ad::ParameterSet<double> ps;
  InputEncoder<double> enc(ps, words, tags, labels, dims, {}, false);
  CHECK(enc.width(false) == 9);
  CHECK(enc.width(true) == 12);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& e : ps)
    for (auto& v : e.tensor->values()) v = u(rng);
  CHECK(ps.at("emb.cue").rows() == 2);

  const Token& tok = c.sentences[0].token(1);
  auto a = enc.encode_values(tok, false, true);
  auto b = enc.encode_values(tok, true, true);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    bool cue_segment = i >= 4 && i < 6;
    if (cue_segment) CHECK(a[i] != b[i]);
    else CHECK(a[i] == b[i]);
  }
  auto f = enc.features(Token{1, "unseen", "unseen", "NOPE", 0, "root", false}, false);
  CHECK(f.word == words.unk());
  CHECK(f.pos == tags.unk());

  ad::ParameterSet<double> ps2;
  InputEncoder<double> nw(ps2, words, tags, labels, dims, {false, true}, false);
  CHECK(nw.width(false) == 5);
  ad::ParameterSet<double> ps3;
  InputEncoder<double> np(ps3, words, tags, labels, dims, {true, false}, false);
  CHECK(np.width(true) == 9);
}

TEST_CASE("word vectors initialize and replace the word table") {
  Vocabulary words({"you", "drive"});
  ad::ParameterSet<float> ps;
  InputEncoder<float> enc(ps, words, Vocabulary({"X"}), Vocabulary({"d"}), {2, 2, 2, 2}, {}, false);
  auto vec = parse_vectors("you 7 8\nother 1 1\n");
  CHECK(enc.init_word_vectors(vec) == 1);
  CHECK(ps.at("emb.word").row(0)[0] == 7.0f);
  enc.set_word_vectors(vec, true);
  CHECK_FALSE(ps.at("emb.word").requires_grad());
  CHECK(enc.words().size() == 2);
  CHECK(enc.words().find("other").has_value());
  CHECK_THROWS_AS(enc.init_word_vectors(parse_vectors("x 1 2 3\n")), Error);
}

TEST_CASE("vocabulary") {
  Vocabulary v;
  CHECK(v.add("a") == 0);
  CHECK(v.add("b") == 1);
  CHECK(v.add("a") == 0);
  CHECK(v.index("zzz") == v.unk());
  CHECK(v.unk() == 2);
}

}  // TEST_SUITE
