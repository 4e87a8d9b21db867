// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stepcot {

enum class KlDirection {
  TeacherTarget,  // sum p_t (log p_t - log p_s)
  StudentTarget,  // sum p_s (log p_s - log p_t)
};

struct DistillConfig {
  double temperature = 2.0;
  double alpha_kd = 0.5;
  double alpha_ch = 1.0;
  std::size_t proj_dim = 256;
  double epsilon = 1e-8;
  KlDirection kl_direction = KlDirection::TeacherTarget;

  std::size_t epochs = 50;  // total, including the teacher-only epochs
  std::size_t pretrain_epochs = 2;
  std::size_t batch_size = 32;
  double teacher_lr = 5e-5;
  double student_lr = 1e-4;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;

  std::size_t teacher_hidden = 768;
  std::size_t student_hidden = 512;
  std::size_t heads = 4;
  std::size_t gat_layers = 2;
  double dropout = 0.1;

  std::string data;       // chain records (JSON)
  std::string features;   // feature table (.json or .csv)
  std::string split_dir;  // train/val/test id lists; empty splits in-process
  std::string out_dir = "run";

  /// Throws std::invalid_argument on an out-of-range field.
  void validate() const;
};

/// Names of every settable key, in declaration order.
const std::vector<std::string>& config_keys();

/// Assigns one key from its text form; throws on unknown keys or bad values.
void set_config_value(DistillConfig& config, const std::string& key, const std::string& value);

/// Parses "key = value" lines; blank lines and '#' comments are ignored.
DistillConfig parse_config(const std::string& text, DistillConfig base = {});
DistillConfig load_config(const std::string& path, DistillConfig base = {});

std::map<std::string, std::string> config_to_map(const DistillConfig& config);

}  // namespace stepcot
