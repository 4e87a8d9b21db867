// SPDX-License-Identifier: Apache-2.0
#include "stepcot/encoders.hpp"

#include <cmath>

namespace stepcot {

PromptTable::PromptTable(std::size_t steps, std::size_t dim, std::mt19937_64& rng)
    : embeddings_(init_uniform(steps, dim, rng)) {}

void PromptTable::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + "/prompts", embeddings_});
}

void PromptTable::zero() {
  for (auto& v : embeddings_.mutable_data()) v = 0.0;
}

Tensor lookup_features(const data::FeatureTable& table, std::span<const std::string> paths) {
  const std::size_t dim = table.dim();
  std::vector<double> values;
  values.reserve(paths.size() * dim);
  for (const auto& p : paths) {
    const auto& row = table.lookup(p);
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({paths.size(), dim}, std::move(values));
}

ImageFeatureSource::ImageFeatureSource(const data::FeatureTable& table,
                                       const Linear& teacher_projection,
                                       const Linear& student_projection)
    : table_(&table), teacher_(teacher_projection), student_(student_projection) {}

Tensor ImageFeatureSource::raw(std::span<const std::string> paths) const {
  return lookup_features(*table_, paths);
}

Tensor ImageFeatureSource::features(std::span<const std::string> paths, FeatureTarget target) const {
  const Tensor x = raw(paths);
  return target == FeatureTarget::Teacher ? teacher_.forward(x) : student_.forward(x);
}

}  // namespace stepcot
