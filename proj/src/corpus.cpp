#include "corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "log.hpp"

namespace negscope {

bool is_punct_tag(std::string_view upos) { return upos == "PUNCT" || upos == "."; }

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool split_meta(std::string_view comment, std::string& key, std::string& value) {
  auto eq = comment.find('=');
  if (eq == std::string_view::npos) return false;
  key = trim(comment.substr(0, eq));
  value = trim(comment.substr(eq + 1));
  return !key.empty();
}

// Returns a description of the first structural defect, or an empty string.
// `where` receives the offending token id.
std::string tree_problem(const Sentence& s, int& where) {
  const int n = static_cast<int>(s.tokens.size());
  int roots = 0;
  for (const Token& t : s.tokens) {
    where = t.id;
    if (t.head < 0 || t.head > n) {
      return "head " + std::to_string(t.head) + " out of range 0.." +
             std::to_string(n);
    }
    if (t.head == t.id) return "token " + std::to_string(t.id) + " is its own head";
    if (t.head == 0) ++roots;
  }
  for (const Token& t : s.tokens) {
    // Walk up at most n steps; failing to reach 0 means a cycle.
    std::vector<int> path{t.id};
    int v = t.head;
    int steps = 0;
    while (v != 0 && steps <= n) {
      auto hit = std::find(path.begin(), path.end(), v);
      if (hit != path.end()) {
        std::string cyc;
        for (auto it = hit; it != path.end(); ++it) cyc += std::to_string(*it) + " -> ";
        cyc += std::to_string(v);
        where = v;
        return "cyclic tree: " + cyc;
      }
      path.push_back(v);
      v = s.tokens[static_cast<std::size_t>(v - 1)].head;
      ++steps;
    }
  }
  if (roots != 1) {
    where = s.tokens.empty() ? 0 : s.tokens.front().id;
    return "expected exactly one root, found " + std::to_string(roots);
  }
  return {};
}

// Removes cue tokens from the scope; logs when anything was removed.
void disjoin(Negation& neg, const std::string& where) {
  std::vector<int> kept;
  std::set_difference(neg.scope.begin(), neg.scope.end(), neg.cue.begin(),
                      neg.cue.end(), std::back_inserter(kept));
  if (kept.size() != neg.scope.size()) {
    log::warn(where + ": cue tokens removed from gold scope");
    neg.scope = std::move(kept);
  }
}

struct PendingBlock {
  std::vector<std::string> comments;
  std::vector<std::pair<std::size_t, std::string>> lines;  // (line no, text)
};

Sentence build_sentence(const PendingBlock& block, const std::string& name,
                        std::size_t ordinal) {
  Sentence s;
  s.comments = block.comments;
  std::size_t columns = 0;
  for (std::size_t i = 0; i < block.lines.size(); ++i) {
    const auto& [lineno, text] = block.lines[i];
    auto cols = split_tabs(text);
    if (i == 0) {
      columns = cols.size();
      if (columns < 6 || (columns - 6) % 2 != 0) {
        throw ParseError(name, lineno,
                         "expected 6 + 2k columns, found " + std::to_string(columns));
      }
      s.negations.resize((columns - 6) / 2);
    } else if (cols.size() != columns) {
      throw ParseError(name, lineno,
                       "ragged block: " + std::to_string(cols.size()) +
                           " columns where the block has " + std::to_string(columns));
    }
    Token t;
    if (!parse_int(cols[0], t.id)) {
      throw ParseError(name, lineno, "non-integer id '" + std::string(cols[0]) + "'");
    }
    if (t.id != static_cast<int>(i) + 1) {
      throw ParseError(name, lineno,
                       "id " + std::to_string(t.id) + " where " +
                           std::to_string(i + 1) + " was expected");
    }
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    if (!parse_int(cols[4], t.head)) {
      throw ParseError(name, lineno, "non-integer head '" + std::string(cols[4]) + "'");
    }
    t.deprel = cols[5];
    t.is_punct = is_punct_tag(t.upos);
    for (std::size_t k = 0; k < s.negations.size(); ++k) {
      std::string_view cue = cols[6 + 2 * k];
      std::string_view scope = cols[7 + 2 * k];
      if (cue == "C") {
        s.negations[k].cue.push_back(t.id);
      } else if (cue != "_") {
        throw ParseError(name, lineno, "cue column must be C or _, got '" +
                                           std::string(cue) + "'");
      }
      if (scope == "S") {
        s.negations[k].scope.push_back(t.id);
      } else if (scope != "_") {
        throw ParseError(name, lineno, "scope column must be S or _, got '" +
                                           std::string(scope) + "'");
      }
    }
    s.tokens.push_back(std::move(t));
  }
  int where = 0;
  std::string problem = tree_problem(s, where);
  if (!problem.empty()) {
    std::size_t lineno = block.lines.front().first;
    if (where >= 1 && static_cast<std::size_t>(where) <= block.lines.size()) {
      lineno = block.lines[static_cast<std::size_t>(where - 1)].first;
    }
    throw ParseError(name, lineno, problem);
  }
  s.lang = s.meta("lang");
  s.source_id = s.meta("sent_id");
  if (s.source_id.empty()) s.source_id = "s" + std::to_string(ordinal + 1);
  for (std::size_t k = 0; k < s.negations.size(); ++k) {
    if (s.negations[k].cue.empty()) {
      throw ParseError(name, block.lines.front().first,
                       "negation " + std::to_string(k) + " has no cue token");
    }
    disjoin(s.negations[k], name + ":" + std::to_string(block.lines.front().first));
  }
  return s;
}

}  // namespace

std::string Sentence::meta(std::string_view key) const {
  std::string k, v;
  for (const auto& c : comments) {
    if (split_meta(c, k, v) && k == key) return v;
  }
  return {};
}

void Sentence::set_meta(std::string_view key, std::string_view value) {
  std::string k, v;
  std::string line = " " + std::string(key) + " = " + std::string(value);
  for (auto& c : comments) {
    if (split_meta(c, k, v) && k == key) {
      c = line;
      return;
    }
  }
  comments.push_back(line);
}

std::size_t Corpus::instance_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.negations.size();
  return n;
}

bool NegationInstance::is_cue(int id) const {
  return std::binary_search(cue.begin(), cue.end(), id);
}

bool NegationInstance::in_scope(int id) const {
  return std::binary_search(scope.begin(), scope.end(), id);
}

Corpus parse_corpus_text(std::string_view text, const std::string& name) {
  Corpus corpus;
  corpus.name = name;
  PendingBlock block;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (block.lines.empty()) return;
    corpus.sentences.push_back(build_sentence(block, name, corpus.sentences.size()));
    block = PendingBlock{};
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    bool last = nl == std::string_view::npos;
    std::string_view line = text.substr(pos, last ? std::string_view::npos : nl - pos);
    pos = last ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (!last) flush();
      continue;
    }
    if (line.front() == '#') {
      if (!block.lines.empty()) {
        throw ParseError(name, lineno, "comment inside a token block");
      }
      block.comments.emplace_back(line.substr(1));
      continue;
    }
    block.lines.emplace_back(lineno, std::string(line));
  }
  flush();
  log::info((name.empty() ? std::string("<input>") : name) + ": " +
            std::to_string(corpus.sentences.size()) + " sentences, " +
            std::to_string(corpus.instance_count()) + " negation instances");
  return corpus;
}

Corpus parse_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus_text(buf.str(), path);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Sentence& s : corpus.sentences) {
    for (const auto& c : s.comments) {
      out += '#';
      out += c;
      out += '\n';
    }
    for (const Token& t : s.tokens) {
      out += std::to_string(t.id);
      for (const std::string* f : {&t.form, &t.lemma, &t.upos}) {
        out += '\t';
        out += *f;
      }
      out += '\t';
      out += std::to_string(t.head);
      out += '\t';
      out += t.deprel;
      for (const Negation& n : s.negations) {
        out += std::binary_search(n.cue.begin(), n.cue.end(), t.id) ? "\tC" : "\t_";
        out += std::binary_search(n.scope.begin(), n.scope.end(), t.id) ? "\tS" : "\t_";
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << serialize_corpus(corpus);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

void validate_sentence(const Sentence& s) {
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (s.tokens[i].id != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::kValidation,
                  s.source_id + ": token ids are not 1..n in order");
    }
  }
  int where = 0;
  std::string problem = tree_problem(s, where);
  if (!problem.empty()) {
    throw Error(ErrorCode::kValidation,
                s.source_id + ": token " + std::to_string(where) + ": " + problem);
  }
  const int n = static_cast<int>(s.tokens.size());
  for (const Negation& neg : s.negations) {
    if (neg.cue.empty()) {
      throw Error(ErrorCode::kValidation, s.source_id + ": negation without cue");
    }
    for (const auto* set : {&neg.cue, &neg.scope}) {
      if (!std::is_sorted(set->begin(), set->end()) ||
          std::adjacent_find(set->begin(), set->end()) != set->end()) {
        throw Error(ErrorCode::kValidation, s.source_id + ": unsorted id set");
      }
      for (int id : *set) {
        if (id < 1 || id > n) {
          throw Error(ErrorCode::kValidation,
                      s.source_id + ": annotation id " + std::to_string(id) +
                          " out of range");
        }
      }
    }
    for (int id : neg.scope) {
      if (std::binary_search(neg.cue.begin(), neg.cue.end(), id)) {
        throw Error(ErrorCode::kValidation,
                    s.source_id + ": token " + std::to_string(id) +
                        " is both cue and scope");
      }
    }
  }
}

std::string strip_label_subtype(std::string_view deprel) {
  return std::string(deprel.substr(0, deprel.find(':')));
}

Sentence strip_language_specific_labels(Sentence sentence) {
  for (Token& t : sentence.tokens) t.deprel = strip_label_subtype(t.deprel);
  return sentence;
}

std::vector<NegationInstance> to_instances(const Corpus& corpus) {
  std::vector<NegationInstance> out;
  out.reserve(corpus.instance_count());
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    const Sentence& s = corpus.sentences[si];
    for (std::size_t k = 0; k < s.negations.size(); ++k) {
      NegationInstance inst;
      inst.sentence = &s;
      inst.sentence_index = si;
      inst.cue_index = k;
      inst.cue = s.negations[k].cue;
      inst.scope = s.negations[k].scope;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

DependencyTree build_tree(const Sentence& sentence) {
  const int n = static_cast<int>(sentence.tokens.size());
  if (n == 0) throw Error(ErrorCode::kValidation, "build_tree: empty sentence");
  DependencyTree tree;
  tree.parent.assign(static_cast<std::size_t>(n) + 1, 0);
  tree.children.assign(static_cast<std::size_t>(n) + 1, {});
  tree.label.assign(static_cast<std::size_t>(n) + 1, {});
  int roots = 0;
  for (const Token& t : sentence.tokens) {
    if (t.head < 0 || t.head > n || t.head == t.id) {
      throw Error(ErrorCode::kValidation,
                  "build_tree: bad head for token " + std::to_string(t.id));
    }
    tree.parent[t.id] = t.head;
    tree.label[t.id] = t.deprel;
    if (t.head == 0) {
      ++roots;
      tree.root = t.id;
    } else {
      tree.children[t.head].push_back(t.id);
    }
  }
  if (roots != 1) {
    throw Error(ErrorCode::kValidation,
                "build_tree: " + std::to_string(roots) + " roots in sentence " +
                    sentence.source_id);
  }
  // Tokens are visited in id order, so children lists are already sorted.
  if (static_cast<int>(tree.top_down_order().size()) != n) {
    throw Error(ErrorCode::kValidation,
                "build_tree: sentence " + sentence.source_id + " is not a tree");
  }
  return tree;
}

std::vector<int> DependencyTree::top_down_order() const {
  std::vector<int> order;
  if (root == 0) return order;
  order.push_back(root);
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int c : children[order[i]]) order.push_back(c);
  }
  return order;
}

std::vector<int> DependencyTree::bottom_up_order() const {
  std::vector<int> order = top_down_order();
  std::reverse(order.begin(), order.end());
  return order;
}

int DependencyTree::depth(int v) const {
  int d = 0;
  while (parent[v] != 0) {
    v = parent[v];
    ++d;
  }
  return d;
}

int DependencyTree::lca(int a, int b) const {
  int da = depth(a), db = depth(b);
  while (da > db) { a = parent[a]; --da; }
  while (db > da) { b = parent[b]; --db; }
  while (a != b) {
    a = parent[a];
    b = parent[b];
  }
  return a;
}

int DependencyTree::distance(int a, int b) const {
  int m = lca(a, b);
  return depth(a) + depth(b) - 2 * depth(m);
}

Sentence strip_punctuation(const Sentence& sentence) {
  const int n = static_cast<int>(sentence.tokens.size());
  std::vector<int> new_id(static_cast<std::size_t>(n) + 1, 0);
  int next = 0;
  for (const Token& t : sentence.tokens) {
    if (!t.is_punct) new_id[t.id] = ++next;
  }
  if (next == n) return sentence;

  Sentence out;
  out.comments = sentence.comments;
  out.lang = sentence.lang;
  out.source_id = sentence.source_id;
  if (next == 0) return out;

  // Nearest surviving ancestor, 0 when the chain ends at a punctuation root.
  auto anchor = [&](int head) {
    while (head != 0 && new_id[head] == 0) head = sentence.token(head).head;
    return head;
  };
  std::vector<int> new_head(static_cast<std::size_t>(next) + 1, 0);
  for (const Token& t : sentence.tokens) {
    if (new_id[t.id] == 0) continue;
    int h = anchor(t.head);
    new_head[new_id[t.id]] = h == 0 ? 0 : new_id[h];
  }
  // A punctuation root can leave several orphans: the first becomes the root.
  int root = 0;
  for (int i = 1; i <= next; ++i) {
    if (new_head[i] != 0) continue;
    if (root == 0) {
      root = i;
    } else {
      new_head[i] = root;
    }
  }
  for (const Token& t : sentence.tokens) {
    if (new_id[t.id] == 0) continue;
    Token c = t;
    c.id = new_id[t.id];
    c.head = new_head[c.id];
    if (c.head == 0 && t.head != 0) c.deprel = "root";
    out.tokens.push_back(std::move(c));
  }
  for (const Negation& neg : sentence.negations) {
    Negation m;
    for (int id : neg.cue) {
      if (new_id[id]) m.cue.push_back(new_id[id]);
    }
    for (int id : neg.scope) {
      if (new_id[id]) m.scope.push_back(new_id[id]);
    }
    if (m.cue.empty()) {
      log::warn(sentence.source_id + ": negation with punctuation-only cue dropped");
      continue;
    }
    out.negations.push_back(std::move(m));
  }
  return out;
}

Corpus strip_punctuation(const Corpus& corpus) {
  Corpus out;
  out.name = corpus.name;
  for (const Sentence& s : corpus.sentences) {
    Sentence t = strip_punctuation(s);
    if (t.tokens.empty()) {
      log::warn(s.source_id + ": sentence consisted only of punctuation, dropped");
      continue;
    }
    out.sentences.push_back(std::move(t));
  }
  return out;
}

}  // namespace negscope
