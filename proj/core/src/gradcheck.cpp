// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include "mmadapt/error.hpp"

namespace mma {

GradCheckOptions default_gradcheck_options(Precision p) {
  if (p == Precision::f64) return {1e-5, 1e-3, false};
  return {5e-2, 1e-1, true};
}

GradCheckResult compare_with_finite_differences(const std::function<double()>& f,
                                                std::span<Parameter* const> params,
                                                std::span<const Tensor> analytic,
                                                const GradCheckOptions& options) {
  require(options.eps > 0.0, ErrorKind::contract, "finite-difference step must be positive");
  require(params.size() == analytic.size(), ErrorKind::contract,
          "one analytic gradient per parameter expected");
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    const Tensor& a = analytic[pi];
    require(a.shape() == p.shape, ErrorKind::dimension,
            "analytic gradient of '" + p.name + "' has shape " + shape_str(a.shape()));
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double original = p.value[i];
      auto eval_at = [&](double offset) {
        p.value[i] = round_to_precision(original + offset);
        const double step = p.value[i] - original;
        const double value = f();
        return std::pair{step, value};
      };
      auto [s_up, f_up] = eval_at(options.eps);
      auto [s_down, f_down] = eval_at(-options.eps);
      double f_up2 = 0.0, f_down2 = 0.0, s_up2 = 0.0, s_down2 = 0.0;
      if (options.fourth_order) {
        std::tie(s_up2, f_up2) = eval_at(2 * options.eps);
        std::tie(s_down2, f_down2) = eval_at(-2 * options.eps);
      }
      p.value[i] = original;
      ++result.coords_checked;
      if (!std::isfinite(f_up) || !std::isfinite(f_down) || !std::isfinite(f_up2) ||
          !std::isfinite(f_down2)) {
        result.finite = false;
        result.failure = "non-finite loss perturbing '" + p.name + "'[" + std::to_string(i) + "]";
        result.worst_param = p.name;
        result.worst_index = i;
        result.max_rel_error = std::numeric_limits<double>::infinity();
        return result;
      }
      double numeric = (f_up - f_down) / (s_up - s_down);
      if (options.fourth_order) {
        // Rounded steps are not exactly h and 2h; use the mean spacing.
        const double h = (s_up - s_down + 0.5 * (s_up2 - s_down2)) / 4.0;
        numeric = (8.0 * (f_up - f_down) - (f_up2 - f_down2)) / (12.0 * h);
      }
      const double denom = std::max({std::abs(a[i]), std::abs(numeric), options.floor});
      const double err = std::abs(a[i] - numeric) / denom;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = err;
        result.worst_param = p.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

double evaluate_loss(const LossBuilder& build) {
  Tape tape;
  Var loss = build(tape);
  require(loss.value().numel() == 1, ErrorKind::contract, "loss builder must return a scalar");
  return loss.value()[0];
}

GradCheckResult finite_diff_check(const LossBuilder& build, std::span<Parameter* const> params,
                                  const GradCheckOptions& options) {
  for (Parameter* p : params) {
    require(p->trainable, ErrorKind::contract, "gradient check on frozen parameter '" + p->name + "'");
    p->grad = Tensor();
  }
  {
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->has_grad() ? p->grad : Tensor(p->shape));
  return compare_with_finite_differences([&] { return evaluate_loss(build); }, params, analytic,
                                         options);
}

}  // namespace mma
