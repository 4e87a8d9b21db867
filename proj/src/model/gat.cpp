// SPDX-License-Identifier: Apache-2.0
#include "stepcot/gat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stepcot/numerics/ops.hpp"

namespace stepcot {

Tensor graph_attention(const Tensor& z, const Tensor& a_src, const Tensor& a_dst,
                       std::size_t nodes_per_graph, double slope, AttentionWeights* attention) {
  if (z.dim() != 2 || a_src.dim() != 2 || a_src.shape() != a_dst.shape())
    throw std::invalid_argument("graph_attention: shape mismatch " + shape_str(z.shape()) + " vs " +
                                shape_str(a_src.shape()));
  const std::size_t heads = a_src.size(0), hd = a_src.size(1), width = z.size(1);
  const std::size_t n = nodes_per_graph;
  if (n == 0 || z.size(0) % n != 0 || heads * hd != width)
    throw std::invalid_argument("graph_attention: shape mismatch " + shape_str(z.shape()) + " vs " +
                                shape_str(a_src.shape()) + " with " + std::to_string(n) +
                                " nodes per graph");
  for (const Tensor* t : {&z, &a_src, &a_dst})
    for (double v : t->data())
      if (!std::isfinite(v)) throw std::domain_error("graph_attention: non-finite input");

  const std::size_t graphs = z.size(0) / n;
  auto zd = z.data();
  auto as = a_src.data();
  auto ad = a_dst.data();
  std::vector<double> out(z.numel(), 0.0);
  std::vector<double> alpha(graphs * heads * n * n), pre(graphs * heads * n * n);
  std::vector<double> src(n), dst(n);

  for (std::size_t g = 0; g < graphs; ++g)
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * hd;
      for (std::size_t i = 0; i < n; ++i) {
        const double* zi = zd.data() + (g * n + i) * width + off;
        double s = 0.0, t = 0.0;
        for (std::size_t k = 0; k < hd; ++k) {
          s += as[off + k] * zi[k];
          t += ad[off + k] * zi[k];
        }
        src[i] = s;
        dst[i] = t;
      }
      double* a = alpha.data() + (g * heads + h) * n * n;
      double* p = pre.data() + (g * heads + h) * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          p[i * n + j] = src[i] + dst[j];
          const double e = p[i * n + j] > 0.0 ? p[i * n + j] : slope * p[i * n + j];
          a[i * n + j] = e;
          mx = std::max(mx, e);
        }
        double zsum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          a[i * n + j] = std::exp(a[i * n + j] - mx);
          zsum += a[i * n + j];
        }
        double* oi = out.data() + (g * n + i) * width + off;
        for (std::size_t j = 0; j < n; ++j) {
          a[i * n + j] /= zsum;
          const double* zj = zd.data() + (g * n + j) * width + off;
          for (std::size_t k = 0; k < hd; ++k) oi[k] += a[i * n + j] * zj[k];
        }
      }
    }
  if (attention) *attention = alpha;

  return make_op_result(
      "graph_attention", z.shape(), std::move(out), {z, a_src, a_dst},
      [alpha = std::move(alpha), pre = std::move(pre), graphs, heads, hd, width, n,
       slope](detail::TensorImpl& o) {
        detail::TensorImpl& pz = *o.parents[0];
        detail::TensorImpl& ps = *o.parents[1];
        detail::TensorImpl& pd = *o.parents[2];
        std::vector<double> dz(pz.data.size(), 0.0), das(ps.data.size(), 0.0), dad(pd.data.size(), 0.0);
        std::vector<double> dsrc(n), ddst(n), dalpha(n);
        for (std::size_t g = 0; g < graphs; ++g)
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * hd;
            const double* a = alpha.data() + (g * heads + h) * n * n;
            const double* p = pre.data() + (g * heads + h) * n * n;
            std::fill(dsrc.begin(), dsrc.end(), 0.0);
            std::fill(ddst.begin(), ddst.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
              const double* gi = o.grad.data() + (g * n + i) * width + off;
              double weighted = 0.0;
              for (std::size_t j = 0; j < n; ++j) {
                const double* zj = pz.data.data() + (g * n + j) * width + off;
                double* dzj = dz.data() + (g * n + j) * width + off;
                double d = 0.0;
                for (std::size_t k = 0; k < hd; ++k) {
                  d += gi[k] * zj[k];
                  dzj[k] += a[i * n + j] * gi[k];
                }
                dalpha[j] = d;
                weighted += a[i * n + j] * d;
              }
              for (std::size_t j = 0; j < n; ++j) {
                const double de = a[i * n + j] * (dalpha[j] - weighted);
                const double dp = de * (p[i * n + j] > 0.0 ? 1.0 : slope);
                dsrc[i] += dp;
                ddst[j] += dp;
              }
            }
            for (std::size_t i = 0; i < n; ++i) {
              const double* zi = pz.data.data() + (g * n + i) * width + off;
              double* dzi = dz.data() + (g * n + i) * width + off;
              for (std::size_t k = 0; k < hd; ++k) {
                dzi[k] += dsrc[i] * ps.data[off + k] + ddst[i] * pd.data[off + k];
                das[off + k] += dsrc[i] * zi[k];
                dad[off + k] += ddst[i] * zi[k];
              }
            }
          }
        auto accumulate = [](detail::TensorImpl& t, const std::vector<double>& d) {
          if (!t.requires_grad) return;
          auto g = t.grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += d[i];
        };
        accumulate(pz, dz);
        accumulate(ps, das);
        accumulate(pd, dad);
      });
}

GatLayer::GatLayer(std::size_t dim, std::size_t heads, double slope, std::mt19937_64& rng)
    : heads_(heads), slope_(slope) {
  if (heads == 0 || dim % heads != 0)
    throw std::invalid_argument("GatLayer: width " + std::to_string(dim) +
                                " is not divisible by " + std::to_string(heads) + " heads");
  const std::size_t hd = dim / heads;
  projection_ = Linear(dim, dim, rng, /*bias=*/false);
  attn_src_ = init_uniform(heads, hd, rng);
  attn_dst_ = init_uniform(heads, hd, rng);
  residual_ = Linear(dim, dim, rng);
  norm_ = LayerNorm(dim);
}

Tensor GatLayer::forward(const Tensor& nodes, std::size_t nodes_per_graph,
                         AttentionWeights* attention) const {
  const Tensor z = projection_.forward(nodes);
  const Tensor heads = graph_attention(z, attn_src_, attn_dst_, nodes_per_graph, slope_, attention);
  return norm_.forward(ops::add(heads, residual_.forward(nodes)));
}

void GatLayer::collect(ParamList& out, const std::string& prefix) const {
  projection_.collect(out, prefix + "/proj");
  out.push_back({prefix + "/attn_src", attn_src_});
  out.push_back({prefix + "/attn_dst", attn_dst_});
  residual_.collect(out, prefix + "/residual");
  norm_.collect(out, prefix + "/norm");
}

}  // namespace stepcot
