// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable forward operations. Every op validates shapes (errors name
// the op and the offending shapes) and rejects non-finite inputs.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "stepcot/numerics/tensor.hpp"

namespace stepcot::ops {

constexpr double kLeakySlope = 0.2;
constexpr double kLayerNormEps = 1e-5;

Tensor matmul(const Tensor& a, const Tensor& b);
/// Same-shape add, or matrix [m x n] + row vector [n].
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// Concatenation of 1-D tensors (axis 0) or matrices (axis 0 or 1).
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// x [batch x in], weight [out x in], optional bias [out] -> [batch x out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = Tensor());
Tensor leaky_relu(const Tensor& x, double slope = kLeakySlope);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Normalizes over the last axis with biased variance, then gamma * x + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = kLayerNormEps);
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);
/// Inverted dropout. Identity when `train` is false.
Tensor dropout(const Tensor& x, double rate, bool train, std::mt19937_64& rng);
/// Dropout with an explicit keep-mask (1 keep, 0 drop); kept values scale by 1/(1-rate).
Tensor dropout_masked(const Tensor& x, double rate, std::span<const std::uint8_t> keep);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Row selection from a matrix; repeated indices accumulate gradients.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor reshape(const Tensor& x, Shape shape);

/// Mean of -log softmax(logits)[label] over rows whose label is not the
/// sentinel. Returns 0 (with zero gradient) when every label is the sentinel.
Tensor cross_entropy_masked(const Tensor& logits, std::span<const int> labels, int sentinel);

}  // namespace stepcot::ops
