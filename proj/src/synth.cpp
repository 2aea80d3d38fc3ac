#include "synth.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <random>
#include <vector>

#include "autodiff.hpp"
#include "error.hpp"
#include "log.hpp"

namespace negscope {

namespace {

constexpr std::array<const char*, 4> kCueForms = {"not", "no", "never", "without"};
constexpr std::array<const char*, 6> kTags = {"NOUN", "VERB", "ADJ", "ADV", "PRON", "DET"};
constexpr std::array<const char*, 7> kLabels = {"nsubj", "obj",  "amod", "advmod",
                                                "det",   "obl",  "nmod"};
constexpr std::array<const char*, 6> kPunct = {",", ";", ":", "(", ")", "--"};

using Dist = std::uniform_int_distribution<std::size_t>;

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) { return Dist(lo, hi)(rng); }

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& xs) {
  return xs[draw(rng, 0, N - 1)];
}

Token content_token(Rng& rng, std::size_t vocab) {
  Token t;
  t.form = "w" + std::to_string(draw(rng, 0, vocab - 1));
  t.lemma = t.form;
  t.upos = pick(rng, kTags);
  t.deprel = pick(rng, kLabels);
  return t;
}

void make_cue(Token& t, Rng& rng) {
  t.form = pick(rng, kCueForms);
  t.lemma = t.form;
  t.upos = "PART";
  t.deprel = "neg";
}

// parent[k] < k for k >= 1; parent[0] = -1.
std::vector<int> random_attachment(Rng& rng, std::size_t n) {
  std::vector<int> parent(n, -1);
  for (std::size_t k = 1; k < n; ++k) parent[k] = static_cast<int>(draw(rng, 0, k - 1));
  return parent;
}

Sentence subtree_sentence(Rng& rng, const SynthOptions& o) {
  std::size_t n = draw(rng, o.min_tokens, o.max_tokens);
  auto parent = random_attachment(rng, n);
  std::vector<int> child_count(n, 0);
  for (std::size_t k = 1; k < n; ++k) ++child_count[static_cast<std::size_t>(parent[k])];
  std::vector<std::size_t> leaves;
  for (std::size_t k = 1; k < n; ++k) {
    if (child_count[k] == 0) leaves.push_back(k);
  }
  std::size_t cue = leaves[draw(rng, 0, leaves.size() - 1)];

  std::vector<int> position(n);  // node -> token id
  std::iota(position.begin(), position.end(), 1);
  std::shuffle(position.begin(), position.end(), rng);

  Sentence s;
  s.tokens.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    Token t = content_token(rng, o.vocab);
    if (k == cue) make_cue(t, rng);
    t.id = position[k];
    t.head = k == 0 ? 0 : position[static_cast<std::size_t>(parent[k])];
    if (k == 0) t.deprel = "root";
    s.tokens[static_cast<std::size_t>(t.id - 1)] = std::move(t);
  }

  // Subtree of the cue's parent: nodes whose ancestor chain reaches it.
  int top = parent[cue];
  Negation neg;
  neg.cue = {position[cue]};
  for (std::size_t k = 0; k < n; ++k) {
    if (k == cue) continue;
    int v = static_cast<int>(k);
    while (v != -1 && v != top) v = parent[static_cast<std::size_t>(v)];
    if (v == top) neg.scope.push_back(position[k]);
  }
  std::sort(neg.scope.begin(), neg.scope.end());
  s.negations.push_back(std::move(neg));
  return s;
}

Sentence window_sentence(Rng& rng, const SynthOptions& o) {
  std::size_t m = draw(rng, o.min_tokens, o.max_tokens);
  std::size_t p = draw(rng, o.min_punct, o.max_punct);

  // Layout: true marks a punctuation slot.
  std::vector<bool> is_punct(m, false);
  for (std::size_t i = 0; i < p; ++i) {
    is_punct.insert(is_punct.begin() + static_cast<std::ptrdiff_t>(draw(rng, 0, is_punct.size())),
                    true);
  }
  std::size_t n = is_punct.size();
  std::vector<int> content_ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_punct[i]) content_ids.push_back(static_cast<int>(i + 1));
  }

  // Content tree over a random order of the content tokens.
  auto parent = random_attachment(rng, m);
  std::vector<int> node_id = content_ids;
  std::shuffle(node_id.begin(), node_id.end(), rng);

  Sentence s;
  s.tokens.resize(n);
  for (std::size_t k = 0; k < m; ++k) {
    Token t = content_token(rng, o.vocab);
    t.id = node_id[k];
    t.head = k == 0 ? 0 : node_id[static_cast<std::size_t>(parent[k])];
    if (k == 0) t.deprel = "root";
    s.tokens[static_cast<std::size_t>(t.id - 1)] = std::move(t);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_punct[i]) continue;
    int id = static_cast<int>(i + 1);
    // Attach to the closest content token, preferring the left one.
    int head = 0;
    for (int d = 1; head == 0; ++d) {
      if (id - d >= 1 && !is_punct[static_cast<std::size_t>(id - d - 1)]) {
        head = id - d;
      } else if (id + d <= static_cast<int>(n) && !is_punct[static_cast<std::size_t>(id + d - 1)]) {
        head = id + d;
      }
    }
    Token t;
    t.id = id;
    t.form = pick(rng, kPunct);
    t.lemma = t.form;
    t.upos = "PUNCT";
    t.head = head;
    t.deprel = "punct";
    t.is_punct = true;
    s.tokens[i] = std::move(t);
  }

  int cue = content_ids[draw(rng, 0, content_ids.size() - 1)];
  Token& ct = s.tokens[static_cast<std::size_t>(cue - 1)];
  std::string deprel = ct.deprel;
  make_cue(ct, rng);
  if (deprel == "root") ct.deprel = deprel;

  Negation neg;
  neg.cue = {cue};
  int left = cue - 1;
  while (left >= 1 && !is_punct[static_cast<std::size_t>(left - 1)]) --left;
  int right = cue + 1;
  while (right <= static_cast<int>(n) && !is_punct[static_cast<std::size_t>(right - 1)]) ++right;
  for (int id = left + 1; id < right; ++id) {
    if (id != cue) neg.scope.push_back(id);
  }
  s.negations.push_back(std::move(neg));
  return s;
}

}  // namespace

std::string to_string(SynthTask task) { return task == SynthTask::kSubtree ? "subtree" : "window"; }

SynthTask parse_synth_task(std::string_view name) {
  if (name == "subtree") return SynthTask::kSubtree;
  if (name == "window") return SynthTask::kWindow;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown synth task '" + std::string(name) + "' (expected subtree or window)");
}

void SynthOptions::validate() const {
  require(min_tokens >= 3, ErrorCode::kInvalidArgument, "synth: sizes must be >= 3");
  require(max_tokens >= min_tokens, ErrorCode::kInvalidArgument,
          "synth: max size below min size");
  require(vocab >= 1, ErrorCode::kInvalidArgument, "synth: vocabulary size must be >= 1");
  require(max_punct >= min_punct, ErrorCode::kInvalidArgument,
          "synth: max punctuation below min punctuation");
}

Corpus synth_generate(const SynthOptions& options) {
  options.validate();
  Rng rng(options.seed);
  Corpus corpus;
  corpus.name = "synth-" + to_string(options.task);
  corpus.sentences.reserve(options.sentences);
  for (std::size_t i = 0; i < options.sentences; ++i) {
    Sentence s = options.task == SynthTask::kSubtree ? subtree_sentence(rng, options)
                                                     : window_sentence(rng, options);
    s.source_id = to_string(options.task) + "-" + std::to_string(i + 1);
    s.lang = "synth";
    s.set_meta("sent_id", s.source_id);
    s.set_meta("lang", s.lang);
    validate_sentence(s);
    corpus.sentences.push_back(std::move(s));
  }
  log::info("synth: generated " + std::to_string(corpus.sentences.size()) + " " +
            to_string(options.task) + " sentences");
  return corpus;
}

}  // namespace negscope
