// SPDX-License-Identifier: Apache-2.0
#include "stepcot/numerics/gru.hpp"

#include <stdexcept>

#include "stepcot/numerics/ops.hpp"

namespace stepcot {

GruCell::GruCell(std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      update_(input_dim + hidden_dim, hidden_dim, rng),
      reset_(input_dim + hidden_dim, hidden_dim, rng),
      candidate_(input_dim + hidden_dim, hidden_dim, rng) {}

Tensor GruCell::forward(const Tensor& x, const Tensor& h) const {
  if (x.dim() != 2 || h.dim() != 2 || x.size(0) != h.size(0) || x.size(1) != input_dim_ ||
      h.size(1) != hidden_dim_)
    throw std::invalid_argument("gru_cell: shape mismatch x " + shape_str(x.shape()) + " vs h " +
                                shape_str(h.shape()) + " for cell " + std::to_string(input_dim_) +
                                "->" + std::to_string(hidden_dim_));
  const Tensor xh = ops::concat({x, h}, 1);
  const Tensor z = ops::sigmoid(update_.forward(xh));
  const Tensor r = ops::sigmoid(reset_.forward(xh));
  const Tensor cand = ops::tanh(candidate_.forward(ops::concat({x, ops::mul(r, h)}, 1)));
  // (1 - z) * h~ + z * h == h~ + z * (h - h~)
  return ops::add(cand, ops::mul(z, ops::sub(h, cand)));
}

void GruCell::collect(ParamList& out, const std::string& prefix) const {
  update_.collect(out, prefix + "/update");
  reset_.collect(out, prefix + "/reset");
  candidate_.collect(out, prefix + "/candidate");
}

void GruCell::zero() {
  update_.zero();
  reset_.zero();
  candidate_.zero();
}

}  // namespace stepcot
