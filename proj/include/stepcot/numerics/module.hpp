// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "stepcot/numerics/tensor.hpp"

namespace stepcot {

/// A trainable tensor with a unique checkpoint path.
struct Param {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<Param>;

/// Throws std::invalid_argument when two parameters share a name.
void require_unique_names(const ParamList& params);
std::size_t count_values(const ParamList& params);
void zero_grads(ParamList& params);

/// Weight matrix [rows x fan_in] drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor init_uniform(std::size_t rows, std::size_t fan_in, std::mt19937_64& rng);
/// Vector of `n` values drawn from U(-bound, bound).
Tensor init_uniform_vector(std::size_t n, double bound, std::mt19937_64& rng);

/// Fully connected layer y = x W^T + b with W [out x in].
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::mt19937_64& rng, bool bias = true);

  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;

  /// Sets W to zero (and b to zero).
  void zero();
  /// Sets W to the identity; requires in == out.
  void set_identity();

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Tensor weight_;
  Tensor bias_;
};

/// Learnable gain and shift for ops::layer_norm.
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t width);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;

 private:
  Tensor gamma_;
  Tensor beta_;
};

}  // namespace stepcot
