// SPDX-License-Identifier: Apache-2.0
#include "stepcot/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stepcot {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& fn, Tensor x, double h) {
  if (!(h >= 1e-7 && h <= 1e-4))
    throw std::invalid_argument("grad_check: step " + std::to_string(h) + " outside [1e-7, 1e-4]");
  const bool had_flag = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();

  const Tensor y = fn(x);
  if (y.numel() != 1)
    throw std::invalid_argument("grad_check: function returned shape " + shape_str(y.shape()) +
                                ", expected a scalar");
  y.backward();
  const std::vector<double> analytic = x.grad();
  x.zero_grad();

  GradCheckResult result;
  auto data = x.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double saved = data[i];
    data[i] = saved + h;
    const double fp = fn(x).item();
    data[i] = saved - h;
    const double fm = fn(x).item();
    data[i] = saved;
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = relative_error(analytic[i], numeric);
    if (i == 0 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = i;
      result.analytic = analytic[i];
      result.numeric = numeric;
    }
  }
  x.zero_grad();
  x.set_requires_grad(had_flag);
  return result;
}

}  // namespace stepcot
