#pragma once

// Finite-difference verification of model gradients on random synthetic
// instances, evaluated in 64-bit precision.

#include <cstddef>
#include <cstdint>
#include <string>

#include "models.hpp"

namespace negscope {

struct GradcheckOptions {
  ModelKind kind = ModelKind::kDLstm;
  std::size_t trials = 20;
  double tol = 1e-4;
  double eps = 1e-5;
  double floor = 1e-5;
  std::uint64_t seed = 1;
  std::size_t min_tokens = 5;
  std::size_t max_tokens = 12;
  // Checks the training-mode graph (dropout active, masks fixed per trial).
  bool train_mode = true;
};

struct GradcheckSummary {
  ModelKind kind = ModelKind::kDLstm;
  std::size_t trials = 0;
  std::size_t checked = 0;
  std::size_t kinks_skipped = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "trial <t>: <param>[<i>] analytic <a> numeric <n>"
  bool passed = false;
};

GradcheckSummary run_gradcheck(const GradcheckOptions& options);
std::string format_gradcheck(const GradcheckSummary& summary);

}  // namespace negscope
