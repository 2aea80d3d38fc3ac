#pragma once

// Negation-annotated dependency corpora in the NSF text format.
//
// One token per line, tab-separated:
//   ID FORM LEMMA UPOS HEAD DEPREL [CUE_i SCOPE_i]...
// CUE_i is "C" or "_", SCOPE_i is "S" or "_". Blocks are separated by blank
// lines; '#' lines carry "key = value" metadata ("lang", "sent_id").

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace negscope {

struct Token {
  int id = 0;  // 1-based position
  std::string form;
  std::string lemma;
  std::string upos;
  int head = 0;  // 0 for the root
  std::string deprel;
  bool is_punct = false;
};

bool is_punct_tag(std::string_view upos);

// Cue and gold scope of one negation, as sorted token ids.
struct Negation {
  std::vector<int> cue;
  std::vector<int> scope;
};

struct Sentence {
  std::vector<Token> tokens;
  // Raw comment lines without the leading '#', in file order.
  std::vector<std::string> comments;
  std::vector<Negation> negations;
  std::string lang;
  std::string source_id;

  std::size_t size() const noexcept { return tokens.size(); }
  const Token& token(int id) const { return tokens.at(static_cast<std::size_t>(id - 1)); }
  // Value of a "key = value" comment, or empty.
  std::string meta(std::string_view key) const;
  void set_meta(std::string_view key, std::string_view value);
};

struct Corpus {
  std::string name;
  std::vector<Sentence> sentences;

  std::size_t instance_count() const;
};

// One cue over one sentence; the unit of training and evaluation. The
// sentence pointer refers into a Corpus that must outlive the instance.
struct NegationInstance {
  const Sentence* sentence = nullptr;
  std::size_t sentence_index = 0;
  std::size_t cue_index = 0;
  std::vector<int> cue;
  std::vector<int> scope;

  bool is_cue(int id) const;
  bool in_scope(int id) const;
};

struct DependencyTree {
  int root = 0;
  // Indexed by token id; entry 0 unused.
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  std::vector<std::string> label;

  std::size_t size() const noexcept { return parent.empty() ? 0 : parent.size() - 1; }
  // Root-first order (every parent precedes its children).
  std::vector<int> top_down_order() const;
  // Leaves-first order (every child precedes its parent).
  std::vector<int> bottom_up_order() const;
  // Number of edges on the path between a and b.
  int distance(int a, int b) const;
  int lca(int a, int b) const;
  int depth(int v) const;
};

Corpus parse_corpus(const std::string& path);
Corpus parse_corpus_text(std::string_view text, const std::string& name = "");

std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::string& path);

// Checks ids, heads, tree shape and annotation sets; throws
// Error(kValidation) on failure.
void validate_sentence(const Sentence& sentence);

// "conj:and" -> "conj"; labels without ':' are unchanged.
std::string strip_label_subtype(std::string_view deprel);
Sentence strip_language_specific_labels(Sentence sentence);

std::vector<NegationInstance> to_instances(const Corpus& corpus);

DependencyTree build_tree(const Sentence& sentence);

// Deletes punctuation tokens, reattaching their dependents to the nearest
// non-punctuation ancestor, and renumbers ids. Negations whose cue consisted
// only of punctuation are dropped.
Sentence strip_punctuation(const Sentence& sentence);
Corpus strip_punctuation(const Corpus& corpus);

}  // namespace negscope
