// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mmadapt/tensor.hpp"

namespace mma {

struct GradCheckRow {
  std::string op;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  std::size_t coords = 0;
  /// Worst coordinate as "param[index]", or the failure message.
  std::string worst;
  bool passed = false;
};

/// Relative-error bar for a precision: 1e-6 in 64-bit, 1e-3 in 32-bit.
double gradcheck_threshold(Precision precision);

/// Names of the cases run_gradcheck_suite covers, in order.
std::vector<std::string> gradcheck_case_names();

/// Finite-difference check of every differentiable op and module on small
/// random instances, evaluated at `precision`.
std::vector<GradCheckRow> run_gradcheck_suite(Precision precision);

}  // namespace mma
