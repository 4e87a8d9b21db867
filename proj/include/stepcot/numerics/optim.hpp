// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "stepcot/numerics/module.hpp"

namespace stepcot {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// AdamW with bias correction and decoupled weight decay:
///   theta <- theta * (1 - lr * wd)
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
/// Parameters without an accumulated gradient are treated as zero-gradient.
class AdamW {
 public:
  AdamW(ParamList params, AdamWOptions options);

  /// Applies one update from the parameters' current gradients. Throws
  /// std::domain_error naming the parameter if any gradient is non-finite;
  /// no parameter is modified in that case.
  void step();
  void zero_grad();

  std::int64_t steps() const { return t_; }
  const AdamWOptions& options() const { return options_; }
  const ParamList& params() const { return params_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_.at(i); }
  const std::vector<double>& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  ParamList params_;
  AdamWOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t t_ = 0;
};

}  // namespace stepcot
