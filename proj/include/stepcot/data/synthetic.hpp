// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "stepcot/data/feature_table.hpp"
#include "stepcot/data/record.hpp"

namespace stepcot::data {

inline constexpr std::size_t kDiagnosisCount = 9;

/// Answers for steps 1..7 implied by each diagnosis (step-7 option order).
/// Normal maps to "No abnormality" followed by N/A for steps 2-6, so every
/// chain satisfies the N/A cascade.
const std::array<std::array<std::string_view, kStepCount>, kDiagnosisCount>& diagnosis_chains();

/// One-hot prototype e_c of length `dim` for diagnosis class c.
std::vector<double> class_prototype(int diagnosis, std::size_t dim);

struct SyntheticOptions {
  std::size_t n = 1000;
  std::size_t feature_dim = 64;
  std::uint64_t seed = 0;
  double noise = 0.1;
};

struct SyntheticDataset {
  std::vector<ChainRecord> records;
  FeatureTable features;
};

/// Records with uniformly drawn diagnoses and features prototype + noise * N(0, 1).
/// Throws std::invalid_argument if n == 0 or feature_dim is smaller than the
/// step-7 class count.
SyntheticDataset generate_synthetic(const SyntheticOptions& options,
                                    const StepSchema& schema = StepSchema::standard());

}  // namespace stepcot::data
