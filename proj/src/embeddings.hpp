#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "autodiff.hpp"
#include "corpus.hpp"

namespace negscope {

// Open string set; unknown strings map to index size() (the UNK slot).
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  // Returns the existing index when already present.
  std::size_t add(std::string_view word);
  std::optional<std::size_t> find(std::string_view word) const;
  // Index of word, or unk() when absent.
  std::size_t index(std::string_view word) const;
  std::size_t unk() const noexcept { return words_.size(); }
  std::size_t size() const noexcept { return words_.size(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  const std::vector<std::string>& words() const noexcept { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// |V|+1 rows of `dim` values; the last row is UNK.
struct EmbeddingTable {
  Vocabulary vocab;
  std::size_t dim = 0;
  std::vector<float> matrix;
  bool trainable = true;

  std::size_t rows() const noexcept { return vocab.size() + 1; }
  std::size_t row(std::string_view word) const { return vocab.index(word); }
  std::span<const float> vector(std::size_t r) const {
    return std::span<const float>(matrix).subspan(r * dim, dim);
  }
  std::span<const float> lookup(std::string_view word) const { return vector(row(word)); }
  bool contains(std::string_view word) const { return vocab.find(word).has_value(); }
};

// Text vectors: "word v1 ... vd" per line. A leading "<count> <dim>" header
// line is skipped. Duplicate words: the last occurrence wins (warned).
EmbeddingTable load_vectors(const std::string& path);
EmbeddingTable parse_vectors(std::string_view text, const std::string& name = "");
void write_vectors(const EmbeddingTable& table, const std::string& path);

struct Translation {
  std::string target;
  double prob = 0.0;
};

// source word -> translations sorted by descending probability, ties by
// target word.
class TranslationTable {
 public:
  void add(const std::string& source, const std::string& target, double prob);
  // Restores the ordering invariant after a series of add() calls.
  void finalize();

  const std::vector<Translation>* find(std::string_view source) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, std::vector<Translation>, std::less<>> entries_;
};

// TSV rows "source<TAB>target<TAB>probability".
TranslationTable load_translation_table(const std::string& path);
TranslationTable parse_translation_table(std::string_view text,
                                         const std::string& name = "");

enum class ComposeMethod { kPremapped, kAverage, kArgmax };

ComposeMethod parse_compose_method(std::string_view name);

struct CompositionResult {
  EmbeddingTable table;
  std::size_t covered = 0;
  std::size_t total = 0;
  double coverage() const { return total ? double(covered) / double(total) : 0.0; }
};

// Builds vectors for source_vocab.
//   premapped: rows copied from `vectors`, which is already in the shared space
//   average:   probability-weighted mean over translations present in `vectors`
//              (renormalized); uniform_average weights them equally
//   argmax:    vector of the most probable translation present in `vectors`
// Words with no usable vector fall back to UNK (zeros).
CompositionResult compose_crosslingual(ComposeMethod method,
                                       const std::vector<std::string>& source_vocab,
                                       const EmbeddingTable& vectors,
                                       const TranslationTable* translations,
                                       bool uniform_average = false);

// Distinct forms of a corpus in first-seen order.
std::vector<std::string> corpus_vocabulary(const Corpus& corpus);

struct FeatureMask {
  bool word = true;
  bool pos = true;
};

struct EmbeddingDims {
  std::size_t word = 100;
  std::size_t cue = 16;
  std::size_t pos = 32;
  std::size_t label = 32;
};

// Per-token row indices into the feature tables.
struct TokenFeatures {
  std::size_t word = 0;
  std::size_t cue = 0;  // 1 for cue tokens
  std::size_t pos = 0;
  std::size_t label = 0;
};

// Word, cue, PoS and dependency-label tables registered in a parameter set
// under "emb.*". The cue table has exactly two rows (not-cue, cue).
template <typename Real>
class InputEncoder {
 public:
  InputEncoder(ad::ParameterSet<Real>& params, Vocabulary words,
               Vocabulary tags, Vocabulary labels, EmbeddingDims dims,
               FeatureMask mask, bool freeze_words);

  // Output length: word + cue + pos (+ label), omitting masked features.
  std::size_t width(bool with_label) const;

  TokenFeatures features(const Token& token, bool is_cue) const;

  // Concatenation word | cue | pos (| label).
  ad::Var encode(ad::Tape<Real>& tape, const TokenFeatures& f,
                 bool with_label) const;

  // Convenience wrapper evaluating encode() on a scratch tape.
  std::vector<Real> encode_values(const Token& token, bool is_cue,
                                  bool with_label) const;

  // Replaces the word table. Rows are copied from table (UNK included).
  void set_word_vectors(const EmbeddingTable& table, bool freeze);
  // Overwrites rows of in-vocabulary words that appear in table.
  std::size_t init_word_vectors(const EmbeddingTable& table);

  const Vocabulary& words() const noexcept { return words_; }
  const Vocabulary& tags() const noexcept { return tags_; }
  const Vocabulary& labels() const noexcept { return labels_; }
  const EmbeddingDims& dims() const noexcept { return dims_; }
  const FeatureMask& mask() const noexcept { return mask_; }

 private:
  ad::ParameterSet<Real>& params_;
  Vocabulary words_, tags_, labels_;
  EmbeddingDims dims_;
  FeatureMask mask_;
  ad::Tensor<Real>* word_;
  ad::Tensor<Real>* cue_;
  ad::Tensor<Real>* pos_;
  ad::Tensor<Real>* label_;
};

extern template class InputEncoder<float>;
extern template class InputEncoder<double>;

}  // namespace negscope
