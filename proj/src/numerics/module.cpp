// SPDX-License-Identifier: Apache-2.0
#include "stepcot/numerics/module.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "stepcot/numerics/ops.hpp"

namespace stepcot {

void require_unique_names(const ParamList& params) {
  std::set<std::string> seen;
  for (const auto& p : params)
    if (!seen.insert(p.name).second)
      throw std::invalid_argument("duplicate parameter name: " + p.name);
}

std::size_t count_values(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

void zero_grads(ParamList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

Tensor init_uniform(std::size_t rows, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(rows * fan_in);
  for (auto& x : v) x = dist(rng);
  Tensor t({rows, fan_in}, std::move(v));
  t.set_requires_grad(true);
  return t;
}

Tensor init_uniform_vector(std::size_t n, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  Tensor t({n}, std::move(v));
  t.set_requires_grad(true);
  return t;
}

Linear::Linear(std::size_t in, std::size_t out, std::mt19937_64& rng, bool bias)
    : in_(in), out_(out), weight_(init_uniform(out, in, rng)) {
  if (bias) {
    bias_ = Tensor({out});
    bias_.set_requires_grad(true);
  }
}

Tensor Linear::forward(const Tensor& x) const { return ops::linear(x, weight_, bias_); }

void Linear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + "/weight", weight_});
  if (bias_.defined()) out.push_back({prefix + "/bias", bias_});
}

void Linear::zero() {
  for (auto& v : weight_.mutable_data()) v = 0.0;
  if (bias_.defined())
    for (auto& v : bias_.mutable_data()) v = 0.0;
}

void Linear::set_identity() {
  if (in_ != out_)
    throw std::invalid_argument("Linear::set_identity: layer is " + std::to_string(out_) + "x" +
                                std::to_string(in_));
  zero();
  for (std::size_t i = 0; i < in_; ++i) weight_.mutable_data()[i * in_ + i] = 1.0;
}

LayerNorm::LayerNorm(std::size_t width) : gamma_({width}, 1.0), beta_({width}, 0.0) {
  gamma_.set_requires_grad(true);
  beta_.set_requires_grad(true);
}

Tensor LayerNorm::forward(const Tensor& x) const { return ops::layer_norm(x, gamma_, beta_); }

void LayerNorm::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + "/gamma", gamma_});
  out.push_back({prefix + "/beta", beta_});
}

}  // namespace stepcot
