// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stepcot {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::string worst;  // input or parameter holding the worst coordinate
  bool passed = false;
};

struct GradCheckSuiteOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  std::uint64_t seed = 0;
  std::size_t model_dim = 16;  // hidden width of the toy teacher and student
  std::size_t batch = 2;
};

/// Central-difference checks of every differentiable op and of the full
/// teacher and student losses on a toy configuration.
std::vector<GradCheckEntry> run_gradcheck_suite(const GradCheckSuiteOptions& options = {});

}  // namespace stepcot
