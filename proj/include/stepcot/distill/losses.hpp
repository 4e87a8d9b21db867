// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>
#include <vector>

#include "stepcot/distill/config.hpp"
#include "stepcot/numerics/module.hpp"

namespace stepcot {

/// Temperature-softened KD loss, T^2 * KL averaged over rows whose label is
/// not `sentinel`. Only `student_logits` receives gradient.
Tensor loss_kd(const Tensor& teacher_logits, const Tensor& student_logits, double temperature,
               std::span<const int> labels, int sentinel,
               KlDirection direction = KlDirection::TeacherTarget);

/// Unmasked form: every row counts.
Tensor loss_kd(const Tensor& teacher_logits, const Tensor& student_logits, double temperature,
               KlDirection direction = KlDirection::TeacherTarget);

struct HsicScalars {
  double h_uu = 0.0;
  double h_vv = 0.0;
  double h_uv = 0.0;
  double w_fw = 0.0;
};

/// Centered-Gram scalars of K_U = softmax(U/T) and K_V = softmax(V/T).
HsicScalars hsic_scalars(const Tensor& u, const Tensor& v, double temperature, double epsilon);

struct ChLoss {
  Tensor loss;  // w_fw * KL(K_U || K_V) row mean; gradient reaches V only
  HsicScalars hsic;
  double divergence = 0.0;
};

/// Row-mean KL(softmax(U/T) || softmax(V/T)) (or the reverse direction);
/// the differentiable factor of the CH loss.
Tensor ch_divergence(const Tensor& u, const Tensor& v, double temperature,
                     KlDirection direction = KlDirection::TeacherTarget);

/// w_fw * ch_divergence, with w_fw a constant (no gradient flows through it).
ChLoss loss_ch(const Tensor& u, const Tensor& v, double temperature, double epsilon,
               KlDirection direction = KlDirection::TeacherTarget);

struct StepLoss {
  Tensor total;
  double ce = 0.0;
  double kd = 0.0;
  double ch = 0.0;
  double w_fw = 0.0;
};

/// CE + alpha_kd * KD + alpha_ch * CH for one step; KD and CH use the same
/// valid rows as CE.
StepLoss student_step_loss(const Tensor& teacher_logits, const Tensor& student_logits,
                           std::span<const int> labels, const Tensor& u, const Tensor& v,
                           const DistillConfig& config);

/// Teacher-side CH maps, one d_T -> p linear map per step.
class ChProjections {
 public:
  ChProjections() = default;
  ChProjections(std::size_t steps, std::size_t in, std::size_t proj_dim, std::mt19937_64& rng);

  Tensor project(std::size_t step, const Tensor& x) const { return maps_.at(step).forward(x); }
  void collect(ParamList& out, const std::string& prefix) const;
  std::size_t proj_dim() const { return maps_.empty() ? 0 : maps_.front().out_features(); }

 private:
  std::vector<Linear> maps_;
};

}  // namespace stepcot
