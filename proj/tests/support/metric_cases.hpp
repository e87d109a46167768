// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mmadapt/training.hpp"

namespace mma::testing {

/// Confusion matrices with UAR/WAR worked out by hand.
struct MetricCase {
  std::string name;
  std::size_t classes;
  std::vector<std::uint64_t> counts;  // row-major, rows are true classes
  double uar;
  double war;
};

inline std::vector<MetricCase> metric_cases() {
  return {
      {"perfect_diagonal", 3, {4, 0, 0, 0, 2, 0, 0, 0, 7}, 1.0, 1.0},
      // Recalls 8/10 and 1/5; 9 of 15 correct.
      {"two_class_worked", 2, {8, 2, 4, 1}, 0.5, 0.6},
      // Class 1 has no samples; recalls 3/4 and 1/2 over the other two.
      {"zero_support", 3, {3, 1, 0, 0, 0, 0, 1, 0, 1}, 0.625, 4.0 / 6.0},
      // Recalls 1/2, 1, 1/2; 7 of 11 correct.
      {"three_class", 3, {2, 1, 1, 0, 3, 0, 1, 1, 2}, 2.0 / 3.0, 7.0 / 11.0},
      {"all_wrong", 2, {0, 4, 2, 0}, 0.0, 0.0},
  };
}

}  // namespace mma::testing
