// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stepcot::data {

inline constexpr std::size_t kStepCount = 7;
inline constexpr int kMissingLabel = -100;

inline constexpr std::string_view kNotApplicable = "N/A";
inline constexpr std::string_view kNoAnswer = "No Answer";
inline constexpr std::string_view kNoAbnormality = "No abnormality";

struct StepTemplate {
  std::string step_name;
  std::string question;
  std::vector<std::string> options;

  /// Options plus the trailing N/A class.
  std::size_t class_count() const { return options.size() + 1; }
  int not_applicable_index() const { return static_cast<int>(options.size()); }
};

/// The fixed seven-step question/option template. Class counts per step are
/// [5, 4, 6, 7, 5, 7, 10].
class StepSchema {
 public:
  /// Throws std::invalid_argument unless exactly kStepCount steps are given.
  explicit StepSchema(std::vector<StepTemplate> steps);

  static const StepSchema& standard();

  std::span<const StepTemplate> steps() const { return steps_; }
  const StepTemplate& step(std::size_t i) const { return steps_.at(i); }
  std::vector<std::size_t> class_counts() const;

  /// Maps known spelling variants to their canonical option text
  /// ("G. Pneumonia" -> "Pneumonia"); other strings pass through unchanged.
  static std::string normalize(std::string_view text);

 private:
  std::vector<StepTemplate> steps_;
};

}  // namespace stepcot::data
