// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mmadapt/autodiff.hpp"

namespace mma {

struct GradCheckOptions {
  double eps = 1e-5;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  /// Components below the floor are effectively compared in absolute terms.
  double floor = 1e-3;
  /// Two-point central difference, or the fourth-order five-point stencil
  /// (which tolerates the larger steps 32-bit rounding noise calls for).
  bool fourth_order = false;
};

/// Step and floor matched to the finite-difference noise of each precision.
GradCheckOptions default_gradcheck_options(Precision p);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
  /// Set when f was non-finite at some perturbed point.
  bool finite = true;
  std::string failure;

  bool passed(double threshold) const { return finite && max_rel_error < threshold; }
};

using LossBuilder = std::function<Var(Tape&)>;

/// Compares `analytic` against central differences of `f` for every
/// coordinate of every parameter in `params`.
GradCheckResult compare_with_finite_differences(const std::function<double()>& f,
                                                std::span<Parameter* const> params,
                                                std::span<const Tensor> analytic,
                                                const GradCheckOptions& options);

/// Builds the loss on a fresh tape, back-propagates, and checks the resulting
/// parameter gradients against central differences of the same builder.
GradCheckResult finite_diff_check(const LossBuilder& build, std::span<Parameter* const> params,
                                  const GradCheckOptions& options);

/// Evaluates the builder once without recording gradients.
double evaluate_loss(const LossBuilder& build);

}  // namespace mma
