// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>

#include "stepcot/numerics/module.hpp"

namespace stepcot {

/// Gated recurrent cell over the concatenated input [x; h]:
///   z  = sigmoid(W_z [x; h] + b_z)
///   r  = sigmoid(W_r [x; h] + b_r)
///   h~ = tanh(W_h [x; r * h] + b_h)
///   h' = (1 - z) * h~ + z * h
class GruCell {
 public:
  GruCell() = default;
  GruCell(std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng);

  /// x [batch x input_dim], h [batch x hidden_dim] -> [batch x hidden_dim].
  Tensor forward(const Tensor& x, const Tensor& h) const;
  void collect(ParamList& out, const std::string& prefix) const;
  void zero();

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  const Linear& update_gate() const { return update_; }
  const Linear& reset_gate() const { return reset_; }
  const Linear& candidate() const { return candidate_; }

 private:
  std::size_t input_dim_ = 0, hidden_dim_ = 0;
  Linear update_;
  Linear reset_;
  Linear candidate_;
};

}  // namespace stepcot
