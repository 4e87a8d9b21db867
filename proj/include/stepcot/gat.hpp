// SPDX-License-Identifier: Apache-2.0
#pragma once

// Multi-head graph attention over small fully connected graphs.
//
// Node features for G graphs of N nodes each are stored as a matrix
// [(G * N) x d], graph-major. For every head h with per-head width d':
//   e_ij   = LeakyReLU(a_src . z_i + a_dst . z_j),   z = W x (head slice)
//   alpha_ij = softmax_j(e_ij)
//   out_i  = sum_j alpha_ij z_j
// Heads are concatenated, so the output width is H * d'.

#include <random>
#include <string>
#include <vector>

#include "stepcot/numerics/module.hpp"

namespace stepcot {

/// Attention coefficients laid out as [graph][head][i][j].
using AttentionWeights = std::vector<double>;

/// Fused attention/aggregation op with an analytic backward pass.
/// z [(G*N) x (H*d')], a_src and a_dst [H x d'].
Tensor graph_attention(const Tensor& z, const Tensor& a_src, const Tensor& a_dst,
                       std::size_t nodes_per_graph, double slope,
                       AttentionWeights* attention = nullptr);

/// One GAT layer: attention over projected nodes, heads concatenated, then
/// LayerNorm(heads + residual_projection(x)).
class GatLayer {
 public:
  GatLayer() = default;
  GatLayer(std::size_t dim, std::size_t heads, double slope, std::mt19937_64& rng);

  Tensor forward(const Tensor& nodes, std::size_t nodes_per_graph,
                 AttentionWeights* attention = nullptr) const;
  void collect(ParamList& out, const std::string& prefix) const;

  std::size_t heads() const { return heads_; }
  const Linear& projection() const { return projection_; }
  const Tensor& attn_src() const { return attn_src_; }
  const Tensor& attn_dst() const { return attn_dst_; }

 private:
  std::size_t heads_ = 0;
  double slope_ = 0.2;
  Linear projection_;  // d -> H * d', no bias
  Tensor attn_src_;    // [H x d']
  Tensor attn_dst_;    // [H x d']
  Linear residual_;
  LayerNorm norm_;
};

}  // namespace stepcot
