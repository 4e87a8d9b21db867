// SPDX-License-Identifier: Apache-2.0
#include "stepcot/student.hpp"

#include <stdexcept>

#include "stepcot/numerics/ops.hpp"

namespace stepcot {

StudentModel::StudentModel(const StudentConfig& config) : config_(config) {
  if (config_.class_counts.size() != data::kStepCount)
    throw std::invalid_argument("student: expected 7 class counts");
  if (config_.raw_dim == 0 || config_.hidden == 0 || config_.proj_dim == 0)
    throw std::invalid_argument("student: dimensions must be positive");
  std::mt19937_64 rng(config_.seed);
  image_proj_ = Linear(config_.raw_dim, config_.hidden, rng);
  for (std::size_t c : config_.class_counts) heads_.emplace_back(config_.hidden, c, rng);
  update_ = Linear(config_.hidden, config_.hidden, rng);
  for (std::size_t s = 0; s < data::kStepCount; ++s)
    ch_proj_.emplace_back(config_.hidden, config_.proj_dim, rng);
}

StudentOutput StudentModel::forward(const Tensor& raw_features, bool /*train*/) const {
  if (raw_features.dim() != 2 || raw_features.size(0) == 0)
    throw std::invalid_argument("student_forward: empty batch");
  StudentOutput out;
  Tensor f = image_proj_.forward(raw_features);
  for (std::size_t s = 0; s < data::kStepCount; ++s) {
    out.logits.push_back(heads_[s].forward(f));
    out.ch_features.push_back(ch_proj_[s].forward(f));
    f = ops::add(f, update_.forward(f));
  }
  return out;
}

ParamList StudentModel::parameters() const {
  ParamList out;
  image_proj_.collect(out, "student/image_proj");
  for (std::size_t s = 0; s < heads_.size(); ++s)
    heads_[s].collect(out, "student/head/" + std::to_string(s));
  update_.collect(out, "student/update");
  for (std::size_t s = 0; s < ch_proj_.size(); ++s)
    ch_proj_[s].collect(out, "student/ch_proj/" + std::to_string(s));
  return out;
}

StudentConfig infer_student_config(const std::map<std::string, Tensor>& values) {
  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = values.find(name);
    if (it == values.end()) throw std::invalid_argument("checkpoint: missing " + name);
    return it->second;
  };
  StudentConfig c;
  const Tensor& proj = get("student/image_proj/weight");
  c.hidden = proj.size(0);
  c.raw_dim = proj.size(1);
  c.proj_dim = get("student/ch_proj/0/weight").size(0);
  c.class_counts.clear();
  for (std::size_t s = 0; s < data::kStepCount; ++s)
    c.class_counts.push_back(get("student/head/" + std::to_string(s) + "/weight").size(0));
  return c;
}

}  // namespace stepcot
