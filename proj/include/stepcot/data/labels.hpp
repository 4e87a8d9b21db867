// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "stepcot/data/record.hpp"
#include "stepcot/data/schema.hpp"

namespace stepcot::data {

/// Per-step class indices: option position, N/A -> |options|, "No Answer" -> kMissingLabel.
using LabelVector = std::array<int, kStepCount>;

int encode_answer(const StepTemplate& step, std::string_view answer);
LabelVector encode_labels(const ChainRecord& record, const StepSchema& schema = StepSchema::standard());

/// Inverse of encode_answer; std::nullopt for the sentinel.
std::optional<std::string> decode_label(const StepTemplate& step, int label);

/// Step-7 class of a record (the diagnosis used for stratification).
int diagnosis_class(const ChainRecord& record, const StepSchema& schema = StepSchema::standard());

}  // namespace stepcot::data
