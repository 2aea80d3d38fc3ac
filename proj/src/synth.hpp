#pragma once

// Synthetic corpora whose gold scopes are deterministic functions of either
// tree structure (subtree task) or punctuation placement (window task).

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "corpus.hpp"

namespace negscope {

enum class SynthTask { kSubtree, kWindow };

std::string to_string(SynthTask task);
SynthTask parse_synth_task(std::string_view name);

struct SynthOptions {
  SynthTask task = SynthTask::kSubtree;
  std::size_t sentences = 100;
  std::size_t min_tokens = 5;  // content tokens, punctuation excluded
  std::size_t max_tokens = 12;
  std::size_t vocab = 50;
  std::uint64_t seed = 1;
  // Window task: punctuation marks inserted per sentence.
  std::size_t min_punct = 1;
  std::size_t max_punct = 3;

  void validate() const;
};

// Subtree task: uniform random attachment tree laid out in a random linear
// order; one random leaf is the cue and the scope is the subtree of its
// parent minus the cue.
// Window task: content tokens with punctuation leaves inserted at random
// positions; the scope is every non-punctuation token strictly inside the
// punctuation window around a random cue.
Corpus synth_generate(const SynthOptions& options);

}  // namespace negscope
