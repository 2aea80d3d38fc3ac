#pragma once

// Scope metrics and the punctuation / syntactic-environment analyses.
// Scopes are sorted token-id sets; cue ids are removed before counting.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "ensemble.hpp"

namespace negscope {

using Scope = std::vector<int>;

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Percentages. Empty prediction sets give P = 100 only when gold is empty
// too; recall is treated symmetrically.
Prf prf_from_counts(std::size_t tp, std::size_t n_pred, std::size_t n_gold);

// Micro-averaged over tokens unless `macro`, which averages per-instance
// scores. Throws Error(kInvalidArgument) if the lists differ in length.
Prf token_prf(std::span<const Scope> pred, std::span<const Scope> gold, bool macro = false);
double pcs(std::span<const Scope> pred, std::span<const Scope> gold);

// Non-punctuation, non-cue tokens strictly between the punctuation marks
// (or sentence edges) that enclose the cue.
Scope punctuation_window(const Sentence& sentence, std::span<const int> cue);
bool is_easy(const NegationInstance& instance);

struct EasyHardSplit {
  std::vector<std::size_t> easy;  // instance indices
  std::vector<std::size_t> hard;
};
EasyHardSplit easy_hard_split(std::span<const NegationInstance> instances);

// Maximal runs of consecutive ids.
std::vector<Scope> contiguous_spans(std::span<const int> scope);
int span_lca(const DependencyTree& tree, std::span<const int> span);
// Incoming-edge label of each span's LCA ("root" for the tree root), one
// entry per span in span order. Empty scopes yield {"<empty>"}.
std::vector<std::string> lca_labels(const NegationInstance& instance, const DependencyTree& tree);

struct BreakdownRow {
  std::string name;
  std::size_t instances = 0;
  Prf prf;
  double pcs = 0.0;
};

struct InstanceDiagnostic {
  std::string id;  // sent_id:instance
  bool easy = false;
  std::vector<std::string> lca;
  bool exact = false;
};

struct EvalReport {
  Prf prf;
  double pcs = 0.0;
  std::size_t instances = 0;
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  bool macro = false;
  std::vector<BreakdownRow> easy_hard;
  std::vector<BreakdownRow> lca;
  std::vector<InstanceDiagnostic> diagnostics;
};

struct EvalOptions {
  bool macro = false;
  bool easy_hard = false;
  bool lca = false;
  bool diagnostics = false;
};

// Cue ids are removed from every predicted scope first.
EvalReport evaluate(std::span<const NegationInstance> instances, std::span<const Scope> pred,
                    const EvalOptions& options = {});

// An instance is counted once under every distinct label of its spans;
// rows are ordered by instance count, then label.
std::vector<BreakdownRow> lca_environment_report(std::span<const NegationInstance> instances,
                                                 std::span<const Scope> pred);
std::vector<BreakdownRow> easy_hard_report(std::span<const NegationInstance> instances,
                                           std::span<const Scope> pred);

// Predicted scopes for each instance, matched on (source id, cue index).
// Every token of every instance must appear exactly once; throws
// Error(kValidation) otherwise.
std::vector<Scope> align_predictions(std::span<const NegationInstance> instances,
                                     const std::vector<LabelRecord>& records);

std::string format_report(const EvalReport& report, bool tsv);
std::string format_diagnostics(const EvalReport& report);

struct PairedReport {
  EvalReport with_punct;
  EvalReport without_punct;
};
PairedReport strip_punctuation_experiment(EvalReport with_punct, EvalReport without_punct);
std::string format_paired_report(const PairedReport& report, bool tsv);

}  // namespace negscope
