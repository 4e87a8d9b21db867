// SPDX-License-Identifier: Apache-2.0
#include "stepcot/data/labels.hpp"

#include <algorithm>
#include <stdexcept>

namespace stepcot::data {

int encode_answer(const StepTemplate& step, std::string_view answer) {
  const std::string a = StepSchema::normalize(answer);
  if (a == kNoAnswer) return kMissingLabel;
  if (a == kNotApplicable) return step.not_applicable_index();
  auto it = std::find(step.options.begin(), step.options.end(), a);
  if (it == step.options.end())
    throw std::invalid_argument(step.step_name + ": answer '" + a + "' is not an option");
  return static_cast<int>(it - step.options.begin());
}

LabelVector encode_labels(const ChainRecord& record, const StepSchema& schema) {
  if (record.vqa_chain.size() != kStepCount)
    throw std::invalid_argument("encode_labels: record " + record.patient_id + " has " +
                                std::to_string(record.vqa_chain.size()) + " steps");
  LabelVector out{};
  for (std::size_t s = 0; s < kStepCount; ++s)
    out[s] = encode_answer(schema.step(s), record.vqa_chain[s].answer);
  return out;
}

std::optional<std::string> decode_label(const StepTemplate& step, int label) {
  if (label == kMissingLabel) return std::nullopt;
  if (label == step.not_applicable_index()) return std::string(kNotApplicable);
  if (label < 0 || label > step.not_applicable_index())
    throw std::out_of_range(step.step_name + ": label " + std::to_string(label) + " out of range");
  return step.options[static_cast<std::size_t>(label)];
}

int diagnosis_class(const ChainRecord& record, const StepSchema& schema) {
  if (record.vqa_chain.size() != kStepCount)
    throw std::invalid_argument("diagnosis_class: record " + record.patient_id + " is incomplete");
  return encode_answer(schema.step(kStepCount - 1), record.vqa_chain.back().answer);
}

}  // namespace stepcot::data
