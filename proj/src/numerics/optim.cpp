// SPDX-License-Identifier: Apache-2.0
#include "stepcot/numerics/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace stepcot {

AdamW::AdamW(ParamList params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  require_unique_names(params_);
  if (!(options_.lr >= 0.0) || !(options_.eps > 0.0) || !(options_.weight_decay >= 0.0) ||
      !(options_.beta1 >= 0.0 && options_.beta1 < 1.0) ||
      !(options_.beta2 >= 0.0 && options_.beta2 < 1.0))
    throw std::invalid_argument("AdamW: invalid hyper-parameters");
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void AdamW::step() {
  for (const auto& p : params_)
    for (double g : p.tensor.grad_view())
      if (!std::isfinite(g)) throw std::domain_error("AdamW: non-finite gradient in " + p.name);

  ++t_;
  const auto& o = options_;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(t_));
  const double decay = 1.0 - o.lr * o.weight_decay;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& theta = params_[k].tensor;
    auto w = theta.mutable_data();
    auto g = theta.grad_view();
    auto& m = m_[k];
    auto& v = v_[k];
    const bool has_grad = !g.empty();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = has_grad ? g[i] : 0.0;
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * gi;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      if (o.weight_decay != 0.0) w[i] *= decay;
      if (m_hat != 0.0) w[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

void AdamW::zero_grad() { zero_grads(params_); }

}  // namespace stepcot
