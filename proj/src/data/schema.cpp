// SPDX-License-Identifier: Apache-2.0
#include "stepcot/data/schema.hpp"

#include <stdexcept>
#include <utility>

namespace stepcot::data {

StepSchema::StepSchema(std::vector<StepTemplate> steps) : steps_(std::move(steps)) {
  if (steps_.size() != kStepCount)
    throw std::invalid_argument("StepSchema: expected " + std::to_string(kStepCount) +
                                " steps, got " + std::to_string(steps_.size()));
}

const StepSchema& StepSchema::standard() {
  static const StepSchema schema({
      {"Step 1", "Is there any abnormal radiodensity in the lungs?",
       {"No abnormality", "Increased opacity", "Decreased opacity", "Mixed"}},
      {"Step 2", "What is the distribution pattern of the abnormal findings?",
       {"Focal", "Scattered", "Diffuse"}},
      {"Step 3", "What is the predominant imaging pattern?",
       {"Consolidation", "Ground-glass opacity", "Reticular", "Cavity", "Nodule"}},
      {"Step 4", "Where is the main abnormality located?",
       {"Right upper lobe", "Left upper lobe", "Lower lobes", "Bilateral diffuse",
        "Pleura/Chest wall", "Mediastinum"}},
      {"Step 5", "Are the lesions well-defined or have any internal characteristics?",
       {"Well-circumscribed", "Spiculated", "Cavitary", "Scarring/Fibrosis"}},
      {"Step 6", "Do the lesions affect adjacent structures or cause structural changes?",
       {"No effect", "Mediastinal shift", "Volume loss/atelectasis", "Pleural effusion",
        "Pneumothorax", "Hyperinflation"}},
      {"Step 7", "What is the most likely radiographic diagnosis?",
       {"Atelectasis", "Cardiomegaly", "Effusion", "Infiltration", "Mass", "Nodule", "Pneumonia",
        "Pneumothorax", "Normal"}},
  });
  return schema;
}

std::vector<std::size_t> StepSchema::class_counts() const {
  std::vector<std::size_t> out;
  for (const auto& s : steps_) out.push_back(s.class_count());
  return out;
}

std::string StepSchema::normalize(std::string_view text) {
  static const std::pair<std::string_view, std::string_view> kAliases[] = {
      {"G. Pneumonia", "Pneumonia"},
  };
  for (const auto& [from, to] : kAliases)
    if (text == from) return std::string(to);
  return std::string(text);
}

}  // namespace stepcot::data
