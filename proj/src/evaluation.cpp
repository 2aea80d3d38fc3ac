#include "evaluation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "error.hpp"

namespace negscope {

namespace {

std::size_t intersection_size(const Scope& a, const Scope& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

void check_aligned(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kInvalidArgument, "misaligned instances: " + std::to_string(a) +
                                                 " predictions vs " + std::to_string(b) +
                                                 " gold scopes");
  }
}

Scope without_cue(const Scope& scope, const NegationInstance& inst) {
  Scope out;
  out.reserve(scope.size());
  for (int id : scope) {
    if (!inst.is_cue(id)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

BreakdownRow make_row(std::string name, const std::vector<Scope>& pred,
                      const std::vector<Scope>& gold) {
  BreakdownRow row;
  row.name = std::move(name);
  row.instances = gold.size();
  row.prf = token_prf(pred, gold);
  row.pcs = pcs(pred, gold);
  return row;
}

std::string instance_id(const NegationInstance& inst) {
  return inst.sentence->source_id + ":" + std::to_string(inst.cue_index);
}

std::string join(const std::vector<std::string>& xs, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

std::string format_rows(const std::vector<BreakdownRow>& rows, const std::string& title,
                        const std::string& key, bool tsv) {
  std::string out;
  if (tsv) {
    for (const auto& r : rows) {
      out += fmt::format("{}\t{}\t{}\t{:.2f}\t{:.2f}\t{:.2f}\t{:.2f}\n", title, r.name, r.instances,
                         r.prf.precision, r.prf.recall, r.prf.f1, r.pcs);
    }
    return out;
  }
  std::size_t width = key.size();
  for (const auto& r : rows) width = std::max(width, r.name.size());
  out += fmt::format("\n{}\n", title);
  out += fmt::format("{:<{}}  {:>9}  {:>7}  {:>7}  {:>7}  {:>7}\n", key, width, "instances", "P",
                     "R", "F1", "PCS");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:>9}  {:>7.2f}  {:>7.2f}  {:>7.2f}  {:>7.2f}\n", r.name, width,
                       r.instances, r.prf.precision, r.prf.recall, r.prf.f1, r.pcs);
  }
  return out;
}

}  // namespace

Prf prf_from_counts(std::size_t tp, std::size_t n_pred, std::size_t n_gold) {
  Prf r;
  r.precision = n_pred ? 100.0 * static_cast<double>(tp) / static_cast<double>(n_pred)
                       : (n_gold ? 0.0 : 100.0);
  r.recall = n_gold ? 100.0 * static_cast<double>(tp) / static_cast<double>(n_gold)
                    : (n_pred ? 0.0 : 100.0);
  double s = r.precision + r.recall;
  r.f1 = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

Prf token_prf(std::span<const Scope> pred, std::span<const Scope> gold, bool macro) {
  check_aligned(pred.size(), gold.size());
  if (!macro) {
    std::size_t tp = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      tp += intersection_size(pred[i], gold[i]);
      np += pred[i].size();
      ng += gold[i].size();
    }
    return prf_from_counts(tp, np, ng);
  }
  Prf sum;
  if (pred.empty()) return prf_from_counts(0, 0, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    Prf r = prf_from_counts(intersection_size(pred[i], gold[i]), pred[i].size(), gold[i].size());
    sum.precision += r.precision;
    sum.recall += r.recall;
    sum.f1 += r.f1;
  }
  double n = static_cast<double>(pred.size());
  return {sum.precision / n, sum.recall / n, sum.f1 / n};
}

double pcs(std::span<const Scope> pred, std::span<const Scope> gold) {
  check_aligned(pred.size(), gold.size());
  if (pred.empty()) return 100.0;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) exact += pred[i] == gold[i];
  return 100.0 * static_cast<double>(exact) / static_cast<double>(pred.size());
}

Scope punctuation_window(const Sentence& sentence, std::span<const int> cue) {
  if (cue.empty()) return {};
  auto [lo_it, hi_it] = std::minmax_element(cue.begin(), cue.end());
  int lo = *lo_it, hi = *hi_it;
  int n = static_cast<int>(sentence.size());
  int left = 0;
  for (int id = lo - 1; id >= 1; --id) {
    if (sentence.token(id).is_punct) {
      left = id;
      break;
    }
  }
  int right = n + 1;
  for (int id = hi + 1; id <= n; ++id) {
    if (sentence.token(id).is_punct) {
      right = id;
      break;
    }
  }
  Scope out;
  for (int id = left + 1; id < right; ++id) {
    if (sentence.token(id).is_punct) continue;
    if (std::find(cue.begin(), cue.end(), id) != cue.end()) continue;
    out.push_back(id);
  }
  return out;
}

bool is_easy(const NegationInstance& instance) {
  return punctuation_window(*instance.sentence, instance.cue) == instance.scope;
}

EasyHardSplit easy_hard_split(std::span<const NegationInstance> instances) {
  EasyHardSplit split;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    (is_easy(instances[i]) ? split.easy : split.hard).push_back(i);
  }
  return split;
}

std::vector<Scope> contiguous_spans(std::span<const int> scope) {
  Scope sorted(scope.begin(), scope.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Scope> spans;
  for (int id : sorted) {
    if (spans.empty() || spans.back().back() + 1 != id) spans.emplace_back();
    if (spans.back().empty() || spans.back().back() != id) spans.back().push_back(id);
  }
  return spans;
}

int span_lca(const DependencyTree& tree, std::span<const int> span) {
  if (span.empty()) throw Error(ErrorCode::kInvalidArgument, "span_lca: empty span");
  int node = span.front();
  for (int id : span.subspan(1)) node = tree.lca(node, id);
  return node;
}

std::vector<std::string> lca_labels(const NegationInstance& instance, const DependencyTree& tree) {
  std::vector<std::string> out;
  for (const auto& span : contiguous_spans(instance.scope)) {
    int node = span_lca(tree, span);
    out.push_back(node == tree.root ? std::string("root") : tree.label[node]);
  }
  if (out.empty()) out.emplace_back("<empty>");
  return out;
}

std::vector<BreakdownRow> easy_hard_report(std::span<const NegationInstance> instances,
                                           std::span<const Scope> pred) {
  check_aligned(pred.size(), instances.size());
  std::vector<Scope> p[2], g[2];
  for (std::size_t i = 0; i < instances.size(); ++i) {
    int k = is_easy(instances[i]) ? 0 : 1;
    p[k].push_back(pred[i]);
    g[k].push_back(instances[i].scope);
  }
  return {make_row("easy", p[0], g[0]), make_row("hard", p[1], g[1])};
}

std::vector<BreakdownRow> lca_environment_report(std::span<const NegationInstance> instances,
                                                 std::span<const Scope> pred) {
  check_aligned(pred.size(), instances.size());
  std::map<std::string, std::pair<std::vector<Scope>, std::vector<Scope>>> groups;
  std::unordered_map<const Sentence*, DependencyTree> trees;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    auto it = trees.find(inst.sentence);
    if (it == trees.end()) it = trees.emplace(inst.sentence, build_tree(*inst.sentence)).first;
    auto labels = lca_labels(inst, it->second);
    std::set<std::string> distinct(labels.begin(), labels.end());
    for (const auto& label : distinct) {
      auto& [p, g] = groups[label];
      p.push_back(pred[i]);
      g.push_back(inst.scope);
    }
  }
  std::vector<BreakdownRow> rows;
  for (const auto& [label, pg] : groups) rows.push_back(make_row(label, pg.first, pg.second));
  std::stable_sort(rows.begin(), rows.end(), [](const BreakdownRow& a, const BreakdownRow& b) {
    return a.instances > b.instances;
  });
  return rows;
}

EvalReport evaluate(std::span<const NegationInstance> instances, std::span<const Scope> pred,
                    const EvalOptions& options) {
  check_aligned(pred.size(), instances.size());
  std::vector<Scope> clean(pred.size()), gold(pred.size());
  EvalReport report;
  report.macro = options.macro;
  report.instances = instances.size();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    clean[i] = without_cue(pred[i], instances[i]);
    gold[i] = without_cue(instances[i].scope, instances[i]);
    report.tp += intersection_size(clean[i], gold[i]);
    report.n_pred += clean[i].size();
    report.n_gold += gold[i].size();
  }
  report.prf = token_prf(clean, gold, options.macro);
  report.pcs = pcs(clean, gold);
  if (options.easy_hard) report.easy_hard = easy_hard_report(instances, clean);
  if (options.lca) report.lca = lca_environment_report(instances, clean);
  if (options.diagnostics) {
    std::unordered_map<const Sentence*, DependencyTree> trees;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      auto it = trees.find(inst.sentence);
      if (it == trees.end()) it = trees.emplace(inst.sentence, build_tree(*inst.sentence)).first;
      report.diagnostics.push_back(
          {instance_id(inst), is_easy(inst), lca_labels(inst, it->second), clean[i] == gold[i]});
    }
  }
  return report;
}

std::vector<Scope> align_predictions(std::span<const NegationInstance> instances,
                                     const std::vector<LabelRecord>& records) {
  std::map<std::pair<std::string, std::size_t>, std::size_t> index;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto key = std::make_pair(instances[i].sentence->source_id, instances[i].cue_index);
    if (!index.emplace(key, i).second) {
      throw Error(ErrorCode::kValidation, "duplicate instance id " + instance_id(instances[i]));
    }
  }
  std::vector<Scope> out(instances.size());
  std::vector<std::vector<std::uint8_t>> seen(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) seen[i].assign(instances[i].sentence->size(), 0);
  for (const auto& r : records) {
    auto it = index.find({r.sentence_id, r.instance});
    if (it == index.end()) {
      throw Error(ErrorCode::kValidation, "prediction for unknown instance " + r.sentence_id +
                                              ":" + std::to_string(r.instance));
    }
    const auto& inst = instances[it->second];
    if (r.token < 1 || r.token > static_cast<int>(inst.sentence->size())) {
      throw Error(ErrorCode::kValidation, "token " + std::to_string(r.token) +
                                              " out of range for " + instance_id(inst));
    }
    auto& mark = seen[it->second][static_cast<std::size_t>(r.token - 1)];
    if (mark) {
      throw Error(ErrorCode::kValidation, "token " + std::to_string(r.token) +
                                              " predicted twice for " + instance_id(inst));
    }
    mark = 1;
    if (r.label == 1) out[it->second].push_back(r.token);
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto covered = static_cast<std::size_t>(std::count(seen[i].begin(), seen[i].end(), 1));
    if (covered != seen[i].size()) {
      throw Error(ErrorCode::kValidation,
                  fmt::format("predictions for {} cover {} of {} tokens", instance_id(instances[i]),
                              covered, seen[i].size()));
    }
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

std::string format_report(const EvalReport& r, bool tsv) {
  std::string out;
  if (tsv) {
    out += "# section\tname\tinstances\tP\tR\tF1\tPCS\n";
    out += fmt::format("overall\t{}\t{}\t{:.2f}\t{:.2f}\t{:.2f}\t{:.2f}\n",
                       r.macro ? "macro" : "micro", r.instances, r.prf.precision, r.prf.recall,
                       r.prf.f1, r.pcs);
    out += format_rows(r.easy_hard, "easy_hard", "", true);
    out += format_rows(r.lca, "lca", "", true);
    return out;
  }
  out += fmt::format("instances  {}\n", r.instances);
  out += fmt::format("averaging  {}\n", r.macro ? "macro" : "micro");
  out += fmt::format("tokens     tp {}  pred {}  gold {}\n", r.tp, r.n_pred, r.n_gold);
  out += fmt::format("P          {:.2f}\n", r.prf.precision);
  out += fmt::format("R          {:.2f}\n", r.prf.recall);
  out += fmt::format("F1         {:.2f}\n", r.prf.f1);
  out += fmt::format("PCS        {:.2f}\n", r.pcs);
  if (!r.easy_hard.empty()) out += format_rows(r.easy_hard, "easy/hard", "split", false);
  if (!r.lca.empty()) out += format_rows(r.lca, "LCA environment", "label", false);
  return out;
}

std::string format_diagnostics(const EvalReport& report) {
  std::string out = "# instance\tsplit\tlca\texact\n";
  for (const auto& d : report.diagnostics) {
    out += fmt::format("{}\t{}\t{}\t{}\n", d.id, d.easy ? "easy" : "hard", join(d.lca, ","),
                       d.exact ? 1 : 0);
  }
  return out;
}

PairedReport strip_punctuation_experiment(EvalReport with_punct, EvalReport without_punct) {
  return {std::move(with_punct), std::move(without_punct)};
}

std::string format_paired_report(const PairedReport& r, bool tsv) {
  const EvalReport* rows[2] = {&r.with_punct, &r.without_punct};
  const char* names[2] = {"with_punct", "without_punct"};
  std::string out;
  if (tsv) {
    out += "# condition\tinstances\tP\tR\tF1\tPCS\n";
    for (int i = 0; i < 2; ++i) {
      out += fmt::format("{}\t{}\t{:.2f}\t{:.2f}\t{:.2f}\t{:.2f}\n", names[i], rows[i]->instances,
                         rows[i]->prf.precision, rows[i]->prf.recall, rows[i]->prf.f1,
                         rows[i]->pcs);
    }
    return out;
  }
  out += fmt::format("{:<14}  {:>9}  {:>7}  {:>7}  {:>7}  {:>7}\n", "condition", "instances", "P",
                     "R", "F1", "PCS");
  for (int i = 0; i < 2; ++i) {
    out += fmt::format("{:<14}  {:>9}  {:>7.2f}  {:>7.2f}  {:>7.2f}  {:>7.2f}\n", names[i],
                       rows[i]->instances, rows[i]->prf.precision, rows[i]->prf.recall,
                       rows[i]->prf.f1, rows[i]->pcs);
  }
  out += fmt::format("delta F1 {:+.2f}\n", r.without_punct.prf.f1 - r.with_punct.prf.f1);
  return out;
}

}  // namespace negscope
