#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "models.hpp"

namespace negscope {

// One row of a probability file:
//   sent_id <TAB> instance <TAB> token <TAB> p_out <TAB> p_in
struct ProbabilityRecord {
  std::string sentence_id;
  std::size_t instance = 0;
  int token = 0;
  double p_out = 0.0;
  double p_in = 0.0;
};

// One row of a label file:
//   sent_id <TAB> instance <TAB> token <TAB> label <TAB> winner <TAB> margin
// label is 1 for in-scope; winner is "A" or "B".
struct LabelRecord {
  std::string sentence_id;
  std::size_t instance = 0;
  int token = 0;
  int label = 0;
  char winner = 'A';
  double margin = 0.0;
};

std::vector<ProbabilityRecord> read_probabilities(const std::string& path);
void write_probabilities(const std::vector<ProbabilityRecord>& records, const std::string& path);
std::vector<LabelRecord> read_labels(const std::string& path);
void write_labels(const std::vector<LabelRecord>& records, const std::string& path);

// Either file kind; probabilities are turned into labels by argmax (ties go
// to out-of-scope).
std::vector<LabelRecord> read_predictions(const std::string& path);

struct VotePrediction {
  std::vector<int> label;     // 1 = in scope
  std::vector<int> winner;    // 0 = model A, 1 = model B
  std::vector<double> margin; // |p_in - p_out| of the winner
};

// Per token, trusts whichever model is more confident. Exact ties go to A.
VotePrediction confidence_vote(std::span<const ProbPair> a, std::span<const ProbPair> b);

// Votes two aligned probability files row by row. Rows must agree on
// (sentence id, instance, token).
std::vector<LabelRecord> vote_records(const std::vector<ProbabilityRecord>& a,
                                      const std::vector<ProbabilityRecord>& b);

inline int argmax_label(const ProbPair& p) { return p[1] > p[0] ? 1 : 0; }

}  // namespace negscope
