// SPDX-License-Identifier: Apache-2.0
#include "stepcot/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "stepcot/numerics/kernels.hpp"

namespace stepcot::ops {
namespace {

using detail::TensorImpl;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                              shape_str(b));
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined input tensor");
}

void require_finite(const char* op, const Tensor& t) {
  require_defined(op, t);
  for (double v : t.data())
    if (!std::isfinite(v))
      throw std::domain_error(std::string(op) + ": non-finite input value in tensor of shape " +
                              shape_str(t.shape()));
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.dim() != 2)
    throw std::invalid_argument(std::string(op) + ": expected a matrix, got shape " +
                                shape_str(t.shape()));
}

TensorImpl& parent(TensorImpl& out, std::size_t i) { return *out.parents[i]; }

// Splits a shape around `axis` into (outer, length, inner) for strided loops.
struct AxisView {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const char* op, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size())
    throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(shape));
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

template <class F>
Tensor unary(const char* op, const Tensor& x, F&& f, std::function<void(TensorImpl&)> bw) {
  require_finite(op, x);
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_op_result(op, x.shape(), std::move(out), {x}, std::move(bw));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_finite("matmul", a);
  require_finite("matmul", b);
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const std::size_t m = a.size(0), k = a.size(1), n = b.size(1);
  if (b.size(0) != k) shape_error("matmul", a.shape(), b.shape());
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_op_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](TensorImpl& o) {
    TensorImpl& pa = parent(o, 0);
    TensorImpl& pb = parent(o, 1);
    if (pa.requires_grad)
      kernels::gemm_nt(o.grad.data(), pb.data.data(), pa.grad_buffer().data(), m, n, k);
    if (pb.requires_grad)
      kernels::gemm_tn(pa.data.data(), o.grad.data(), pb.grad_buffer().data(), k, m, n);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_finite("add", a);
  require_finite("add", b);
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return make_op_result("add", a.shape(), std::move(out), {a, b}, [](TensorImpl& o) {
      for (std::size_t k = 0; k < 2; ++k) {
        TensorImpl& p = parent(o, k);
        if (!p.requires_grad) continue;
        auto g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
    });
  }
  if (a.dim() == 2 && b.dim() == 1 && b.size(0) == a.size(1)) {
    const std::size_t rows = a.size(0), cols = a.size(1);
    std::vector<double> out(a.numel());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = a.data()[r * cols + c] + b.data()[c];
    return make_op_result("add", a.shape(), std::move(out), {a, b}, [rows, cols](TensorImpl& o) {
      TensorImpl& pa = parent(o, 0);
      TensorImpl& pb = parent(o, 1);
      if (pa.requires_grad) {
        auto g = pa.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
      if (pb.requires_grad) {
        auto g = pb.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) g[c] += o.grad[r * cols + c];
      }
    });
  }
  shape_error("add", a.shape(), b.shape());
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_finite("sub", a);
  require_finite("sub", b);
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op_result("sub", a.shape(), std::move(out), {a, b}, [](TensorImpl& o) {
    for (std::size_t k = 0; k < 2; ++k) {
      TensorImpl& p = parent(o, k);
      if (!p.requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      auto g = p.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_finite("elementwise_mul", a);
  require_finite("elementwise_mul", b);
  if (a.shape() != b.shape()) shape_error("elementwise_mul", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op_result("elementwise_mul", a.shape(), std::move(out), {a, b}, [](TensorImpl& o) {
    TensorImpl& pa = parent(o, 0);
    TensorImpl& pb = parent(o, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * pa.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double v) { return v * factor; },
      [factor](TensorImpl& o) {
        auto g = parent(o, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * o.grad[i];
      });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  for (const auto& p : parts) require_finite("concat", p);
  const std::size_t rank = parts[0].dim();
  if (rank == 0 || rank > 2 || axis >= rank)
    throw std::invalid_argument("concat: unsupported axis " + std::to_string(axis) +
                                " for shape " + shape_str(parts[0].shape()));
  for (const auto& p : parts) {
    if (p.dim() != rank) shape_error("concat", parts[0].shape(), p.shape());
    if (rank == 2 && p.size(1 - axis) != parts[0].size(1 - axis))
      shape_error("concat", parts[0].shape(), p.shape());
  }

  if (rank == 1 || axis == 0) {
    // Row-major layout: axis-0 concatenation is plain appending.
    Shape shape = parts[0].shape();
    shape[0] = 0;
    std::vector<double> out;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
      offsets.push_back(out.size());
      shape[0] += p.size(0);
      out.insert(out.end(), p.data().begin(), p.data().end());
    }
    return make_op_result("concat", shape, std::move(out), parts, [offsets](TensorImpl& o) {
      for (std::size_t k = 0; k < o.parents.size(); ++k) {
        TensorImpl& p = parent(o, k);
        if (!p.requires_grad) continue;
        auto g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[offsets[k] + i];
      }
    });
  }

  const std::size_t rows = parts[0].size(0);
  std::size_t cols = 0;
  std::vector<std::size_t> col_offsets;
  for (const auto& p : parts) {
    col_offsets.push_back(cols);
    cols += p.size(1);
  }
  std::vector<double> out(rows * cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t w = parts[k].size(1);
    auto src = parts[k].data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src.begin() + r * w, w, out.begin() + r * cols + col_offsets[k]);
  }
  return make_op_result("concat", {rows, cols}, std::move(out), parts,
                        [rows, cols, col_offsets](TensorImpl& o) {
                          for (std::size_t k = 0; k < o.parents.size(); ++k) {
                            TensorImpl& p = parent(o, k);
                            if (!p.requires_grad) continue;
                            const std::size_t w = p.shape[1];
                            auto g = p.grad_buffer();
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < w; ++c)
                                g[r * w + c] += o.grad[r * cols + col_offsets[k] + c];
                          }
                        });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_finite("linear", x);
  require_finite("linear", weight);
  require_matrix("linear", x);
  require_matrix("linear", weight);
  const std::size_t batch = x.size(0), in = x.size(1), out_dim = weight.size(0);
  if (weight.size(1) != in) shape_error("linear", x.shape(), weight.shape());
  const bool has_bias = bias.defined();
  if (has_bias) {
    require_finite("linear", bias);
    if (bias.dim() != 1 || bias.size(0) != out_dim) shape_error("linear", weight.shape(), bias.shape());
  }
  std::vector<double> out(batch * out_dim, 0.0);
  if (has_bias)
    for (std::size_t r = 0; r < batch; ++r)
      std::copy(bias.data().begin(), bias.data().end(), out.begin() + r * out_dim);
  kernels::gemm_nt(x.data().data(), weight.data().data(), out.data(), batch, in, out_dim);

  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_op_result(
      "linear", {batch, out_dim}, std::move(out), std::move(inputs),
      [batch, in, out_dim, has_bias](TensorImpl& o) {
        TensorImpl& px = parent(o, 0);
        TensorImpl& pw = parent(o, 1);
        if (px.requires_grad)
          kernels::gemm_nn(o.grad.data(), pw.data.data(), px.grad_buffer().data(), batch, out_dim, in);
        if (pw.requires_grad)
          kernels::gemm_tn(o.grad.data(), px.data.data(), pw.grad_buffer().data(), out_dim, batch, in);
        if (has_bias && parent(o, 2).requires_grad) {
          auto g = parent(o, 2).grad_buffer();
          for (std::size_t r = 0; r < batch; ++r)
            for (std::size_t c = 0; c < out_dim; ++c) g[c] += o.grad[r * out_dim + c];
        }
      });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(
      "leaky_relu", x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](TensorImpl& o) {
        TensorImpl& p = parent(o, 0);
        auto g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * (p.data[i] > 0.0 ? 1.0 : slope);
      });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](TensorImpl& o) {
        TensorImpl& p = parent(o, 0);
        auto g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i)
          if (p.data[i] > 0.0) g[i] += o.grad[i];
      });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](TensorImpl& o) {
        auto g = parent(o, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * (1.0 - o.data[i] * o.data[i]);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](TensorImpl& o) {
        auto g = parent(o, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * o.data[i] * (1.0 - o.data[i]);
      });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_finite("layer_norm", x);
  require_finite("layer_norm", gamma);
  require_finite("layer_norm", beta);
  if (x.dim() == 0) throw std::invalid_argument("layer_norm: scalar input");
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.numel() / std::max<std::size_t>(width, 1);
  if (gamma.shape() != Shape{width}) shape_error("layer_norm", x.shape(), gamma.shape());
  if (beta.shape() != Shape{width}) shape_error("layer_norm", x.shape(), beta.shape());
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");

  std::vector<double> out(x.numel()), xhat(x.numel()), inv_std(rows);
  auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * width;
    double mu = 0.0;
    for (std::size_t c = 0; c < width; ++c) mu += row[c];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t c = 0; c < width; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(width);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < width; ++c) {
      const double h = (row[c] - mu) * inv_std[r];
      xhat[r * width + c] = h;
      out[r * width + c] = gamma.data()[c] * h + beta.data()[c];
    }
  }
  return make_op_result(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [rows, width, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorImpl& o) {
        TensorImpl& px = parent(o, 0);
        TensorImpl& pg = parent(o, 1);
        TensorImpl& pb = parent(o, 2);
        if (pg.requires_grad) {
          auto g = pg.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < width; ++c) g[c] += o.grad[r * width + c] * xhat[r * width + c];
        }
        if (pb.requires_grad) {
          auto g = pb.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < width; ++c) g[c] += o.grad[r * width + c];
        }
        if (px.requires_grad) {
          auto g = px.grad_buffer();
          const double inv_w = 1.0 / static_cast<double>(width);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t c = 0; c < width; ++c) {
              const double d = o.grad[r * width + c] * pg.data[c];
              mean_d += d;
              mean_dx += d * xhat[r * width + c];
            }
            mean_d *= inv_w;
            mean_dx *= inv_w;
            for (std::size_t c = 0; c < width; ++c) {
              const double d = o.grad[r * width + c] * pg.data[c];
              g[r * width + c] += inv_std[r] * (d - mean_d - xhat[r * width + c] * mean_dx);
            }
          }
        }
      });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  require_finite("softmax", x);
  const AxisView v = axis_view("softmax", x.shape(), axis);
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.len * v.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < v.len; ++k) mx = std::max(mx, in[base + k * v.inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < v.len; ++k) {
        const double e = std::exp(in[base + k * v.inner] - mx);
        out[base + k * v.inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < v.len; ++k) out[base + k * v.inner] /= z;
    }
  return make_op_result("softmax", x.shape(), std::move(out), {x}, [v](TensorImpl& node) {
    auto g = parent(node, 0).grad_buffer();
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t base = o * v.len * v.inner + i;
        double dotp = 0.0;
        for (std::size_t k = 0; k < v.len; ++k)
          dotp += node.grad[base + k * v.inner] * node.data[base + k * v.inner];
        for (std::size_t k = 0; k < v.len; ++k) {
          const std::size_t idx = base + k * v.inner;
          g[idx] += node.data[idx] * (node.grad[idx] - dotp);
        }
      }
  });
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
  require_finite("log_softmax", x);
  const AxisView v = axis_view("log_softmax", x.shape(), axis);
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.len * v.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < v.len; ++k) mx = std::max(mx, in[base + k * v.inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < v.len; ++k) z += std::exp(in[base + k * v.inner] - mx);
      const double lse = mx + std::log(z);
      for (std::size_t k = 0; k < v.len; ++k) out[base + k * v.inner] = in[base + k * v.inner] - lse;
    }
  return make_op_result("log_softmax", x.shape(), std::move(out), {x}, [v](TensorImpl& node) {
    auto g = parent(node, 0).grad_buffer();
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t base = o * v.len * v.inner + i;
        double gsum = 0.0;
        for (std::size_t k = 0; k < v.len; ++k) gsum += node.grad[base + k * v.inner];
        for (std::size_t k = 0; k < v.len; ++k) {
          const std::size_t idx = base + k * v.inner;
          g[idx] += node.grad[idx] - std::exp(node.data[idx]) * gsum;
        }
      }
  });
}

Tensor dropout_masked(const Tensor& x, double rate, std::span<const std::uint8_t> keep) {
  require_finite("dropout", x);
  if (!(rate >= 0.0 && rate < 1.0))
    throw std::invalid_argument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  if (keep.size() != x.numel())
    throw std::invalid_argument("dropout: mask length " + std::to_string(keep.size()) +
                                " does not match shape " + shape_str(x.shape()));
  const double s = 1.0 / (1.0 - rate);
  std::vector<double> factor(x.numel());
  for (std::size_t i = 0; i < factor.size(); ++i) factor[i] = keep[i] ? s : 0.0;
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factor[i];
  return make_op_result("dropout", x.shape(), std::move(out), {x},
                        [factor = std::move(factor)](TensorImpl& o) {
                          auto g = parent(o, 0).grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor[i];
                        });
}

Tensor dropout(const Tensor& x, double rate, bool train, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw std::invalid_argument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  if (!train || rate == 0.0) {
    require_finite("dropout", x);
    return x;
  }
  std::bernoulli_distribution drop(rate);
  std::vector<std::uint8_t> keep(x.numel());
  for (auto& k : keep) k = drop(rng) ? 0 : 1;
  return dropout_masked(x, rate, keep);
}

Tensor sum(const Tensor& x) {
  require_finite("sum", x);
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_op_result("sum", {}, {s}, {x}, [](TensorImpl& o) {
    auto g = parent(o, 0).grad_buffer();
    for (auto& gi : g) gi += o.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  require_finite("mean", x);
  if (x.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  return make_op_result("mean", {}, {s / n}, {x}, [n](TensorImpl& o) {
    auto g = parent(o, 0).grad_buffer();
    for (auto& gi : g) gi += o.grad[0] / n;
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_finite("gather_rows", x);
  require_matrix("gather_rows", x);
  const std::size_t n = x.size(0), w = x.size(1);
  std::vector<double> out(rows.size() * w);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n)
      throw std::out_of_range("gather_rows: row " + std::to_string(rows[r]) +
                              " out of range for shape " + shape_str(x.shape()));
    std::copy_n(x.data().begin() + rows[r] * w, w, out.begin() + r * w);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_op_result("gather_rows", {rows.size(), w}, std::move(out), {x},
                        [idx = std::move(idx), w](TensorImpl& o) {
                          auto g = parent(o, 0).grad_buffer();
                          for (std::size_t r = 0; r < idx.size(); ++r)
                            for (std::size_t c = 0; c < w; ++c) g[idx[r] * w + c] += o.grad[r * w + c];
                        });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require_finite("reshape", x);
  if (shape_numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_op_result("reshape", std::move(shape), std::move(out), {x}, [](TensorImpl& o) {
    auto g = parent(o, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor cross_entropy_masked(const Tensor& logits, std::span<const int> labels, int sentinel) {
  require_finite("cross_entropy_masked", logits);
  require_matrix("cross_entropy_masked", logits);
  const std::size_t batch = logits.size(0), classes = logits.size(1);
  if (labels.size() != batch)
    throw std::invalid_argument("cross_entropy_masked: " + std::to_string(labels.size()) +
                                " labels for logits of shape " + shape_str(logits.shape()));
  std::size_t valid = 0;
  for (std::size_t r = 0; r < batch; ++r) {
    const int y = labels[r];
    if (y == sentinel) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw std::out_of_range("cross_entropy_masked: label " + std::to_string(y) + " at row " +
                              std::to_string(r) + " outside [0, " + std::to_string(classes) + ")");
    ++valid;
  }

  // Softmax rows are kept for the backward pass: d/dlogits = (p - onehot) / N.
  std::vector<double> probs(batch * classes, 0.0);
  double total = 0.0;
  auto in = logits.data();
  for (std::size_t r = 0; r < batch; ++r) {
    if (labels[r] == sentinel) continue;
    const double* row = in.data() + r * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(row[c] - lse);
    total += lse - row[labels[r]];
  }
  const double loss = valid ? total / static_cast<double>(valid) : 0.0;
  std::vector<int> y(labels.begin(), labels.end());
  return make_op_result(
      "cross_entropy_masked", {}, {loss}, {logits},
      [probs = std::move(probs), y = std::move(y), valid, classes, sentinel](TensorImpl& o) {
        auto g = parent(o, 0).grad_buffer();
        if (valid == 0) return;
        const double s = o.grad[0] / static_cast<double>(valid);
        for (std::size_t r = 0; r < y.size(); ++r) {
          if (y[r] == sentinel) continue;
          for (std::size_t c = 0; c < classes; ++c) {
            const double target = static_cast<int>(c) == y[r] ? 1.0 : 0.0;
            g[r * classes + c] += s * (probs[r * classes + c] - target);
          }
        }
      });
}

}  // namespace stepcot::ops
