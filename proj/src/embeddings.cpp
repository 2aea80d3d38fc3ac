#include "embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "log.hpp"

namespace negscope {

// ------------------------------------------------------------ Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> words) {
  for (auto& w : words) add(w);
}

std::size_t Vocabulary::add(std::string_view word) {
  auto it = index_.find(std::string(word));
  if (it != index_.end()) return it->second;
  words_.emplace_back(word);
  index_.emplace(words_.back(), words_.size() - 1);
  return words_.size() - 1;
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index(std::string_view word) const {
  return find(word).value_or(unk());
}

// --------------------------------------------------------------- vectors

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  // strtod accepts the exponent and inf/nan spellings from_chars also does;
  // keep a terminated copy.
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return !tmp.empty() && end == tmp.c_str() + tmp.size();
}

bool is_uint(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0, lineno = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(lineno, line);
  }
}

}  // namespace

EmbeddingTable parse_vectors(std::string_view text, const std::string& name) {
  EmbeddingTable table;
  std::vector<std::vector<float>> rows;
  std::size_t duplicates = 0;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    auto fields = split_ws(line);
    if (fields.empty()) return;
    if (lineno == 1 && fields.size() == 2 && is_uint(fields[0]) && is_uint(fields[1])) {
      return;
    }
    std::size_t d = fields.size() - 1;
    if (d == 0) throw ParseError(name, lineno, "vector line without values");
    if (table.dim == 0) {
      table.dim = d;
    } else if (d != table.dim) {
      throw ParseError(name, lineno,
                       "inconsistent dimension " + std::to_string(d) + ", expected " +
                           std::to_string(table.dim));
    }
    std::vector<float> v(d);
    for (std::size_t i = 0; i < d; ++i) {
      double x = 0;
      if (!parse_double(fields[i + 1], x)) {
        throw ParseError(name, lineno, "bad number '" + std::string(fields[i + 1]) + "'");
      }
      v[i] = static_cast<float>(x);
    }
    if (auto existing = table.vocab.find(fields[0])) {
      ++duplicates;
      log::warn(name + ":" + std::to_string(lineno) + ": duplicate vector for '" +
                std::string(fields[0]) + "', keeping the last");
      rows[*existing] = std::move(v);
    } else {
      table.vocab.add(fields[0]);
      rows.push_back(std::move(v));
    }
  });
  table.matrix.reserve((rows.size() + 1) * table.dim);
  for (const auto& r : rows) table.matrix.insert(table.matrix.end(), r.begin(), r.end());
  table.matrix.insert(table.matrix.end(), table.dim, 0.0f);
  return table;
}

EmbeddingTable load_vectors(const std::string& path) {
  return parse_vectors(read_file(path), path);
}

void write_vectors(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  char buf[32];
  for (std::size_t r = 0; r < table.vocab.size(); ++r) {
    out << table.vocab.word(r);
    for (float x : table.vector(r)) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(x));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

// ----------------------------------------------------------- translations

void TranslationTable::add(const std::string& source, const std::string& target,
                           double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw Error(ErrorCode::kValidation,
                "translation probability " + std::to_string(prob) + " outside [0,1]");
  }
  entries_[source].push_back({target, prob});
}

void TranslationTable::finalize() {
  for (auto& [src, list] : entries_) {
    std::sort(list.begin(), list.end(), [](const Translation& a, const Translation& b) {
      if (a.prob != b.prob) return a.prob > b.prob;
      return a.target < b.target;
    });
  }
}

const std::vector<Translation>* TranslationTable::find(std::string_view source) const {
  auto it = entries_.find(source);
  return it == entries_.end() ? nullptr : &it->second;
}

TranslationTable parse_translation_table(std::string_view text, const std::string& name) {
  TranslationTable table;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (line.empty()) return;
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3) {
      throw ParseError(name, lineno, "expected 3 tab-separated columns");
    }
    double p = 0;
    if (!parse_double(cols[2], p)) {
      throw ParseError(name, lineno, "bad probability '" + std::string(cols[2]) + "'");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ParseError(name, lineno,
                       "probability " + std::string(cols[2]) + " outside [0,1]");
    }
    table.add(std::string(cols[0]), std::string(cols[1]), p);
  });
  table.finalize();
  return table;
}

TranslationTable load_translation_table(const std::string& path) {
  return parse_translation_table(read_file(path), path);
}

// ------------------------------------------------------------- composing

ComposeMethod parse_compose_method(std::string_view name) {
  if (name == "premapped" || name == "a") return ComposeMethod::kPremapped;
  if (name == "average" || name == "b") return ComposeMethod::kAverage;
  if (name == "argmax" || name == "c") return ComposeMethod::kArgmax;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown composition method '" + std::string(name) + "'");
}

CompositionResult compose_crosslingual(ComposeMethod method,
                                       const std::vector<std::string>& source_vocab,
                                       const EmbeddingTable& vectors,
                                       const TranslationTable* translations,
                                       bool uniform_average) {
  if (method != ComposeMethod::kPremapped && translations == nullptr) {
    throw Error(ErrorCode::kInvalidArgument,
                "average/argmax composition needs a translation table");
  }
  CompositionResult result;
  EmbeddingTable& out = result.table;
  out.dim = vectors.dim;
  out.trainable = false;
  const std::size_t d = vectors.dim;
  std::vector<double> acc(d);

  for (const std::string& word : source_vocab) {
    if (out.vocab.find(word)) continue;
    ++result.total;
    bool found = false;
    std::fill(acc.begin(), acc.end(), 0.0);
    if (method == ComposeMethod::kPremapped) {
      if (auto r = vectors.vocab.find(word)) {
        auto v = vectors.vector(*r);
        std::copy(v.begin(), v.end(), acc.begin());
        found = true;
      }
    } else if (const auto* list = translations->find(word)) {
      if (method == ComposeMethod::kArgmax) {
        for (const Translation& t : *list) {
          if (auto r = vectors.vocab.find(t.target)) {
            auto v = vectors.vector(*r);
            std::copy(v.begin(), v.end(), acc.begin());
            found = true;
            break;
          }
        }
      } else {
        double mass = 0.0;
        for (const Translation& t : *list) {
          auto r = vectors.vocab.find(t.target);
          if (!r) continue;
          double w = uniform_average ? 1.0 : t.prob;
          auto v = vectors.vector(*r);
          for (std::size_t i = 0; i < d; ++i) acc[i] += w * v[i];
          mass += w;
          found = true;
        }
        if (found && mass > 0.0) {
          for (auto& x : acc) x /= mass;
        } else if (found) {
          // All present translations had probability zero: fall back to a
          // uniform mean over them.
          std::size_t k = 0;
          for (const Translation& t : *list) {
            if (auto r = vectors.vocab.find(t.target)) {
              auto v = vectors.vector(*r);
              for (std::size_t i = 0; i < d; ++i) acc[i] += v[i];
              ++k;
            }
          }
          for (auto& x : acc) x /= double(k);
        }
      }
    }
    if (!found) continue;
    ++result.covered;
    out.vocab.add(word);
    for (double x : acc) out.matrix.push_back(static_cast<float>(x));
  }
  out.matrix.insert(out.matrix.end(), d, 0.0f);
  log::info("cross-lingual composition: " + std::to_string(result.covered) + "/" +
            std::to_string(result.total) + " source words covered (" +
            std::to_string(100.0 * result.coverage()) + "%)");
  return result;
}

std::vector<std::string> corpus_vocabulary(const Corpus& corpus) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) {
      if (seen.insert(t.form).second) out.push_back(t.form);
    }
  }
  return out;
}

// ---------------------------------------------------------- InputEncoder

template <typename Real>
InputEncoder<Real>::InputEncoder(ad::ParameterSet<Real>& params, Vocabulary words,
                                 Vocabulary tags, Vocabulary labels, EmbeddingDims dims,
                                 FeatureMask mask, bool freeze_words)
    : params_(params),
      words_(std::move(words)),
      tags_(std::move(tags)),
      labels_(std::move(labels)),
      dims_(dims),
      mask_(mask),
      word_(nullptr),
      cue_(nullptr),
      pos_(nullptr),
      label_(nullptr) {
  if (mask_.word) {
    word_ = &params.add("emb.word", {words_.size() + 1, dims_.word}, !freeze_words);
  }
  cue_ = &params.add("emb.cue", {2, dims_.cue});
  if (mask_.pos) pos_ = &params.add("emb.pos", {tags_.size() + 1, dims_.pos});
  label_ = &params.add("emb.label", {labels_.size() + 1, dims_.label});
}

template <typename Real>
std::size_t InputEncoder<Real>::width(bool with_label) const {
  std::size_t w = dims_.cue;
  if (mask_.word) w += dims_.word;
  if (mask_.pos) w += dims_.pos;
  if (with_label) w += dims_.label;
  return w;
}

template <typename Real>
TokenFeatures InputEncoder<Real>::features(const Token& token, bool is_cue) const {
  TokenFeatures f;
  f.word = words_.index(token.form);
  f.cue = is_cue ? 1 : 0;
  f.pos = tags_.index(token.upos);
  f.label = labels_.index(token.deprel);
  return f;
}

template <typename Real>
ad::Var InputEncoder<Real>::encode(ad::Tape<Real>& tape, const TokenFeatures& f,
                                   bool with_label) const {
  std::vector<ad::Var> parts;
  parts.reserve(4);
  if (word_) parts.push_back(tape.lookup(*word_, f.word));
  parts.push_back(tape.lookup(*cue_, f.cue));
  if (pos_) parts.push_back(tape.lookup(*pos_, f.pos));
  if (with_label) parts.push_back(tape.lookup(*label_, f.label));
  return tape.concat(parts);
}

template <typename Real>
std::vector<Real> InputEncoder<Real>::encode_values(const Token& token, bool is_cue,
                                                    bool with_label) const {
  ad::Tape<Real> tape;
  auto v = tape.value(encode(tape, features(token, is_cue), with_label));
  return {v.begin(), v.end()};
}

template <typename Real>
void InputEncoder<Real>::set_word_vectors(const EmbeddingTable& table, bool freeze) {
  if (!word_) return;
  if (table.dim != dims_.word) {
    throw Error(ErrorCode::kInvalidArgument,
                "word vectors have dimension " + std::to_string(table.dim) +
                    ", model expects " + std::to_string(dims_.word));
  }
  words_ = table.vocab;
  ad::Tensor<Real> t({table.rows(), table.dim}, !freeze);
  for (std::size_t i = 0; i < table.matrix.size(); ++i) t[i] = static_cast<Real>(table.matrix[i]);
  word_ = &params_.reset("emb.word", std::move(t));
}

template <typename Real>
std::size_t InputEncoder<Real>::init_word_vectors(const EmbeddingTable& table) {
  if (!word_) return 0;
  if (table.dim != dims_.word) {
    throw Error(ErrorCode::kInvalidArgument,
                "word vectors have dimension " + std::to_string(table.dim) +
                    ", model expects " + std::to_string(dims_.word));
  }
  std::size_t hits = 0;
  for (std::size_t r = 0; r < words_.size(); ++r) {
    auto src = table.vocab.find(words_.word(r));
    if (!src) continue;
    auto v = table.vector(*src);
    auto dst = word_->row(r);
    for (std::size_t i = 0; i < v.size(); ++i) dst[i] = static_cast<Real>(v[i]);
    ++hits;
  }
  log::info("word vectors: " + std::to_string(hits) + "/" + std::to_string(words_.size()) +
            " training words covered");
  return hits;
}

template class InputEncoder<float>;
template class InputEncoder<double>;

}  // namespace negscope
