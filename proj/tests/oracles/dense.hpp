// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plain nested-loop reference math shared by the test oracles. Matrices are
// std::vector<std::vector<double>>; nothing here touches the tensor library.

#include <cmath>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat to_mat(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
  Mat m(rows, Vec(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = flat[i * cols + j];
  return m;
}

// y = W x + b with W [out x in].
inline Vec affine(const Mat& w, const Vec& b, const Vec& x) {
  Vec y(w.size(), 0.0);
  for (std::size_t o = 0; o < w.size(); ++o) {
    double acc = b.empty() ? 0.0 : b[o];
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[o][i] * x[i];
    y[o] = acc;
  }
  return y;
}

inline Vec softmax(const Vec& z) {
  double mx = z[0];
  for (double v : z) mx = v > mx ? v : mx;
  Vec out(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += out[i] = std::exp(z[i] - mx);
  for (double& v : out) v /= s;
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec layer_norm(const Vec& x, const Vec& gamma, const Vec& beta, double eps) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gamma[i] * (x[i] - mu) / std::sqrt(var + eps) + beta[i];
  return out;
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// One GRU step, written gate by gate for a single example.
struct GruWeights {
  Mat wz, wr, wh;
  Vec bz, br, bh;
};

inline Vec gru(const GruWeights& g, const Vec& x, const Vec& h) {
  const Vec xh = concat(x, h);
  Vec z = affine(g.wz, g.bz, xh), r = affine(g.wr, g.br, xh);
  for (double& v : z) v = sigmoid(v);
  for (double& v : r) v = sigmoid(v);
  Vec rh(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) rh[i] = r[i] * h[i];
  Vec cand = affine(g.wh, g.bh, concat(x, rh));
  Vec out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = (1.0 - z[i]) * std::tanh(cand[i]) + z[i] * h[i];
  return out;
}

}  // namespace oracle
