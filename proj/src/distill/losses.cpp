// SPDX-License-Identifier: Apache-2.0
#include "stepcot/distill/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "stepcot/data/schema.hpp"
#include "stepcot/numerics/ops.hpp"

namespace stepcot {

namespace {

std::vector<std::size_t> valid_rows(std::span<const int> labels, int sentinel) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != sentinel) rows.push_back(i);
  return rows;
}

// A zero that stays connected to `x`, so callers always get a gradient path.
Tensor connected_zero(const Tensor& x) { return ops::scale(ops::sum(x), 0.0); }

// Row-mean KL between softmax(a/T) and softmax(b/T); `a` is detached.
// TeacherTarget weights by the distribution of `a`.
Tensor row_mean_kl(const Tensor& a, const Tensor& b, double temperature, KlDirection direction) {
  const double inv_t = 1.0 / temperature;
  const double rows = static_cast<double>(a.size(0));
  Tensor pa, la;
  {
    NoGradGuard guard;
    const Tensor sa = ops::scale(a.detach(), inv_t);
    pa = ops::softmax(sa, 1);
    la = ops::log_softmax(sa, 1);
  }
  const Tensor sb = ops::scale(b, inv_t);
  const Tensor lb = ops::log_softmax(sb, 1);
  if (direction == KlDirection::TeacherTarget) {
    double entropy_term;
    {
      NoGradGuard guard;
      entropy_term = ops::sum(ops::mul(pa, la)).item();
    }
    const Tensor cross = ops::sum(ops::mul(pa, lb));
    return ops::scale(ops::sub(Tensor::scalar(entropy_term), cross), 1.0 / rows);
  }
  const Tensor pb = ops::softmax(sb, 1);
  return ops::scale(ops::sum(ops::mul(pb, ops::sub(lb, la))), 1.0 / rows);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.dim() != 2 || a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor loss_kd(const Tensor& teacher_logits, const Tensor& student_logits, double temperature,
               std::span<const int> labels, int sentinel, KlDirection direction) {
  require_same_shape("loss_kd", teacher_logits, student_logits);
  if (!(temperature > 0.0)) throw std::invalid_argument("loss_kd: temperature must be > 0");
  if (labels.size() != teacher_logits.size(0))
    throw std::invalid_argument("loss_kd: label count does not match batch");
  const auto rows = valid_rows(labels, sentinel);
  if (rows.empty()) return connected_zero(student_logits);
  const Tensor t = ops::gather_rows(teacher_logits.detach(), rows);
  const Tensor s = ops::gather_rows(student_logits, rows);
  return ops::scale(row_mean_kl(t, s, temperature, direction), temperature * temperature);
}

Tensor loss_kd(const Tensor& teacher_logits, const Tensor& student_logits, double temperature,
               KlDirection direction) {
  const std::vector<int> labels(teacher_logits.dim() == 2 ? teacher_logits.size(0) : 0, 0);
  return loss_kd(teacher_logits, student_logits, temperature, labels, data::kMissingLabel, direction);
}

HsicScalars hsic_scalars(const Tensor& u, const Tensor& v, double temperature, double epsilon) {
  require_same_shape("loss_ch", u, v);
  NoGradGuard guard;
  const std::size_t n = u.size(0);
  auto centered_gram = [&](const Tensor& x) {
    const Tensor k = ops::softmax(ops::scale(x.detach(), 1.0 / temperature), 1);
    // M = K K^T, then C M C by subtracting row and column means.
    std::vector<double> g(n * n, 0.0);
    const std::size_t p = k.size(1);
    auto kd = k.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < p; ++c) acc += kd[i * p + c] * kd[j * p + c];
        g[i * n + j] = acc;
      }
    std::vector<double> row(n, 0.0), col(n, 0.0);
    double all = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        row[i] += g[i * n + j];
        col[j] += g[i * n + j];
        all += g[i * n + j];
      }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        g[i * n + j] += -row[i] * inv - col[j] * inv + all * inv * inv;
    return g;
  };
  const auto a = centered_gram(u);
  const auto b = centered_gram(v);
  HsicScalars h;
  for (std::size_t i = 0; i < n; ++i) {
    h.h_uu += a[i * n + i];
    h.h_vv += b[i * n + i];
  }
  for (std::size_t i = 0; i < a.size(); ++i) h.h_uv += a[i] * b[i];
  h.w_fw = h.h_uv / std::sqrt((h.h_uu + epsilon) * (h.h_vv + epsilon));
  return h;
}

Tensor ch_divergence(const Tensor& u, const Tensor& v, double temperature, KlDirection direction) {
  require_same_shape("loss_ch", u, v);
  if (u.size(0) == 0) throw std::invalid_argument("loss_ch: empty batch");
  return row_mean_kl(u, v, temperature, direction);
}

ChLoss loss_ch(const Tensor& u, const Tensor& v, double temperature, double epsilon,
               KlDirection direction) {
  require_same_shape("loss_ch", u, v);
  if (u.size(0) == 0) throw std::invalid_argument("loss_ch: empty batch");
  if (!(temperature > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("loss_ch: temperature and epsilon must be > 0");
  ChLoss out;
  out.hsic = hsic_scalars(u, v, temperature, epsilon);
  const Tensor kl = ch_divergence(u, v, temperature, direction);
  out.divergence = kl.item();
  out.loss = ops::scale(kl, out.hsic.w_fw);
  return out;
}

StepLoss student_step_loss(const Tensor& teacher_logits, const Tensor& student_logits,
                           std::span<const int> labels, const Tensor& u, const Tensor& v,
                           const DistillConfig& config) {
  StepLoss out;
  const Tensor ce = ops::cross_entropy_masked(student_logits, labels, data::kMissingLabel);
  const Tensor kd = loss_kd(teacher_logits, student_logits, config.temperature, labels,
                            data::kMissingLabel, config.kl_direction);
  require_same_shape("loss_ch", u, v);
  if (u.size(0) != labels.size())
    throw std::invalid_argument("student_step_loss: feature rows do not match labels");
  const auto rows = valid_rows(labels, data::kMissingLabel);
  Tensor ch;
  if (rows.empty()) {
    ch = connected_zero(v);
  } else {
    auto c = loss_ch(ops::gather_rows(u.detach(), rows), ops::gather_rows(v, rows),
                     config.temperature, config.epsilon, config.kl_direction);
    ch = c.loss;
    out.w_fw = c.hsic.w_fw;
  }
  out.ce = ce.item();
  out.kd = kd.item();
  out.ch = ch.item();
  out.total = ops::add(ops::add(ce, ops::scale(kd, config.alpha_kd)), ops::scale(ch, config.alpha_ch));
  return out;
}

ChProjections::ChProjections(std::size_t steps, std::size_t in, std::size_t proj_dim,
                             std::mt19937_64& rng) {
  for (std::size_t s = 0; s < steps; ++s) maps_.emplace_back(in, proj_dim, rng);
}

void ChProjections::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t s = 0; s < maps_.size(); ++s) maps_[s].collect(out, prefix + "/" + std::to_string(s));
}

}  // namespace stepcot
