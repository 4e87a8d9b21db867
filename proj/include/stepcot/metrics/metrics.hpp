// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-step classification metrics over rows whose label is not the sentinel.
// Sensitivity, specificity, precision and F1 are macro one-vs-rest averages
// over the classes that occur in the labels; all reported values are
// percentages.

#include <span>
#include <string>
#include <vector>

#include "stepcot/numerics/tensor.hpp"

namespace stepcot::metrics {

struct StepMetrics {
  double accuracy = 0.0;
  double auc = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  std::size_t count = 0;
  bool auc_defined = false;  // false when fewer than two classes are present
};

struct AucResult {
  double value = -1.0;  // in [0, 1]; -1 when undefined
  bool defined = false;
};

/// counts[true * classes + predicted] over valid rows.
std::vector<std::size_t> confusion_matrix(std::span<const int> predicted, std::span<const int> labels,
                                          std::size_t classes, int sentinel);

std::vector<int> argmax_rows(const Tensor& scores);

/// Rank-based (Mann-Whitney) one-vs-rest AUC with average ranks for ties,
/// macro-averaged over classes that have both positives and negatives.
AucResult macro_auc(const Tensor& probabilities, std::span<const int> labels, int sentinel);

/// Rows of `probabilities` must each sum to 1 within 1e-6.
StepMetrics per_step_metrics(const Tensor& probabilities, std::span<const int> labels, int sentinel);

struct StepReport {
  std::vector<std::string> step_names;
  std::vector<StepMetrics> steps;

  /// Unweighted mean accuracy over steps that have at least one valid row.
  double mean_accuracy() const;
};

/// JSON text; indent < 0 gives a single line.
std::string report_to_json(const StepReport& report, int indent = 2);
std::string report_to_table(const StepReport& report);

}  // namespace stepcot::metrics
