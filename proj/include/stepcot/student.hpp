// SPDX-License-Identifier: Apache-2.0
#pragma once

// Compact chain student: projected image features, one linear head per step,
// and a shared residual update f <- f + U f applied after each prediction.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "stepcot/data/schema.hpp"
#include "stepcot/numerics/module.hpp"

namespace stepcot {

struct StudentConfig {
  std::size_t raw_dim = 64;
  std::size_t hidden = 512;
  std::size_t proj_dim = 256;
  std::vector<std::size_t> class_counts = data::StepSchema::standard().class_counts();
  std::uint64_t seed = 0;
};

struct StudentOutput {
  std::vector<Tensor> logits;       // one [B x C_s] tensor per step
  std::vector<Tensor> ch_features;  // V_s, [B x proj_dim] per step
};

class StudentModel {
 public:
  explicit StudentModel(const StudentConfig& config);

  /// The student has no stochastic layers; `train` is accepted for symmetry.
  StudentOutput forward(const Tensor& raw_features, bool train) const;

  ParamList parameters() const;
  const StudentConfig& config() const { return config_; }

  const Linear& image_projection() const { return image_proj_; }
  Linear& update() { return update_; }
  std::vector<Linear>& heads() { return heads_; }
  std::vector<Linear>& ch_projections() { return ch_proj_; }

 private:
  StudentConfig config_;
  Linear image_proj_;
  std::vector<Linear> heads_;
  Linear update_;
  std::vector<Linear> ch_proj_;
};

/// Recovers dims from checkpoint tensor shapes (entries prefixed "student/").
StudentConfig infer_student_config(const std::map<std::string, Tensor>& values);

}  // namespace stepcot
