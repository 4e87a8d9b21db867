// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "stepcot/numerics/module.hpp"
#include "stepcot/numerics/tensor.hpp"

namespace stepcot {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;   // at worst_index
};

/// Compares the analytic gradient of `fn` at `x` with central differences
/// (f(x + h e_i) - f(x - h e_i)) / 2h, coordinate by coordinate. The relative
/// error uses max(|analytic|, |numeric|, 1e-12) as denominator.
///
/// `x` must be a leaf tensor; it is perturbed in place and restored. `fn` may
/// ignore its argument and close over a model that owns `x`.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& fn, Tensor x,
                           double h = 1e-6);

double relative_error(double analytic, double numeric);

}  // namespace stepcot
