// SPDX-License-Identifier: Apache-2.0
#pragma once

// Stand-ins for the frozen backbones: a learnable table of step-prompt
// embeddings and a frozen image-feature table with trainable projections.

#include <random>
#include <span>
#include <string>

#include "stepcot/data/feature_table.hpp"
#include "stepcot/data/schema.hpp"
#include "stepcot/numerics/module.hpp"

namespace stepcot {

class PromptTable {
 public:
  PromptTable() = default;
  PromptTable(std::size_t steps, std::size_t dim, std::mt19937_64& rng);

  /// [steps x dim], the trainable step vectors themselves.
  const Tensor& encode() const { return embeddings_; }
  void collect(ParamList& out, const std::string& prefix) const;
  void zero();

  std::size_t steps() const { return embeddings_.size(0); }
  std::size_t dim() const { return embeddings_.size(1); }

 private:
  Tensor embeddings_;
};

enum class FeatureTarget { Teacher, Student };

/// Frozen raw features plus one trainable projection per consumer.
class ImageFeatureSource {
 public:
  ImageFeatureSource(const data::FeatureTable& table, const Linear& teacher_projection,
                     const Linear& student_projection);

  /// Stacked raw vectors [B x raw_dim]; never requires grad.
  Tensor raw(std::span<const std::string> paths) const;
  /// raw(paths) through the requested projection.
  Tensor features(std::span<const std::string> paths, FeatureTarget target) const;

 private:
  const data::FeatureTable* table_;
  Linear teacher_;
  Linear student_;
};

/// Stacks the rows of `table` for `paths`; throws naming an unknown path.
Tensor lookup_features(const data::FeatureTable& table, std::span<const std::string> paths);

}  // namespace stepcot
