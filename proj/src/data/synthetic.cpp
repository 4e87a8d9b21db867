// SPDX-License-Identifier: Apache-2.0
#include "stepcot/data/synthetic.hpp"

#include <cstdio>
#include <random>
#include <stdexcept>

namespace stepcot::data {

const std::array<std::array<std::string_view, kStepCount>, kDiagnosisCount>& diagnosis_chains() {
  static const std::array<std::array<std::string_view, kStepCount>, kDiagnosisCount> chains{{
      {"Increased opacity", "Focal", "Consolidation", "Lower lobes", "Scarring/Fibrosis",
       "Volume loss/atelectasis", "Atelectasis"},
      {"Increased opacity", "Diffuse", "Reticular", "Mediastinum", "Well-circumscribed",
       "Mediastinal shift", "Cardiomegaly"},
      {"Increased opacity", "Focal", "Ground-glass opacity", "Pleura/Chest wall",
       "Well-circumscribed", "Pleural effusion", "Effusion"},
      {"Increased opacity", "Scattered", "Ground-glass opacity", "Bilateral diffuse",
       "Scarring/Fibrosis", "No effect", "Infiltration"},
      {"Increased opacity", "Focal", "Nodule", "Right upper lobe", "Spiculated", "No effect", "Mass"},
      {"Increased opacity", "Focal", "Nodule", "Left upper lobe", "Well-circumscribed", "No effect",
       "Nodule"},
      {"Mixed", "Scattered", "Consolidation", "Lower lobes", "Cavitary", "No effect", "Pneumonia"},
      {"Decreased opacity", "Focal", "Cavity", "Pleura/Chest wall", "Well-circumscribed",
       "Pneumothorax", "Pneumothorax"},
      {"No abnormality", "N/A", "N/A", "N/A", "N/A", "N/A", "Normal"},
  }};
  return chains;
}

std::vector<double> class_prototype(int diagnosis, std::size_t dim) {
  if (diagnosis < 0 || static_cast<std::size_t>(diagnosis) >= kDiagnosisCount || dim < kDiagnosisCount)
    throw std::invalid_argument("class_prototype: bad class or dimension");
  std::vector<double> p(dim, 0.0);
  p[static_cast<std::size_t>(diagnosis)] = 1.0;
  return p;
}

SyntheticDataset generate_synthetic(const SyntheticOptions& options, const StepSchema& schema) {
  const std::size_t min_dim = schema.step(kStepCount - 1).class_count();
  if (options.n == 0) throw std::invalid_argument("generate_synthetic: n must be at least 1");
  if (options.feature_dim < min_dim)
    throw std::invalid_argument("generate_synthetic: feature_dim " +
                                std::to_string(options.feature_dim) + " is below " +
                                std::to_string(min_dim));
  if (!(options.noise >= 0.0)) throw std::invalid_argument("generate_synthetic: noise must be >= 0");

  static constexpr std::string_view kSources[] = {"IU X-Ray", "PadChest-GR", "Med-Image-Report"};
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> pick_class(0, static_cast<int>(kDiagnosisCount) - 1);
  std::uniform_int_distribution<int> pick_source(0, 2);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticDataset out;
  out.features = FeatureTable(options.feature_dim);
  const auto& chains = diagnosis_chains();
  for (std::size_t i = 0; i < options.n; ++i) {
    const int cls = pick_class(rng);
    const auto& chain = chains[static_cast<std::size_t>(cls)];
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);

    ChainRecord r;
    r.patient_id = id;
    r.image_path = std::string("images/") + id + ".png";
    r.origin = std::string(kSources[pick_source(rng)]);
    r.report = cls == 8 ? "No acute cardiopulmonary abnormality."
                        : "Findings are consistent with " + std::string(chain.back()) + ".";
    for (std::size_t s = 0; s < kStepCount; ++s) {
      const StepTemplate& t = schema.step(s);
      ChainStep step{t.step_name, t.question, t.options, std::string(chain[s]), {}};
      step.reasoning = chain[s] == kNotApplicable
                           ? "No abnormalities exist, making this step irrelevant."
                           : "The findings support " + std::string(chain[s]) + " at this step.";
      r.vqa_chain.push_back(std::move(step));
    }

    auto f = class_prototype(cls, options.feature_dim);
    for (auto& x : f) x += options.noise * gauss(rng);
    out.features.insert(r.image_path, std::move(f));
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace stepcot::data
