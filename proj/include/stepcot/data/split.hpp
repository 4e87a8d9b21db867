// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stepcot/data/record.hpp"

namespace stepcot::data {

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
  bool operator==(const SplitCounts&) const = default;
};

/// floor(train * n) / floor(val * n) / remainder.
SplitCounts split_counts(std::size_t n, const SplitRatios& ratios = {});

struct SplitManifest {
  std::vector<std::string> train, val, test;
  std::map<int, SplitCounts> per_class;
};

/// Per-class seeded shuffle followed by the split_counts allocation. Within a
/// class, ids are sorted before shuffling so the result does not depend on
/// input order.
SplitManifest stratified_split(std::span<const ChainRecord> records,
                               const std::function<int(const ChainRecord&)>& class_of,
                               const SplitRatios& ratios, std::uint64_t seed);

/// Writes train.csv, val.csv and test.csv (one patient_id per LF-terminated line).
void write_split_files(const SplitManifest& manifest, const std::filesystem::path& dir);
std::vector<std::string> read_id_list(const std::filesystem::path& path);

}  // namespace stepcot::data
