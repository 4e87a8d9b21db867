// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "stepcot/data/record.hpp"

namespace stepcot::data {

struct DatasetStats {
  std::size_t records = 0;
  std::map<std::string, std::size_t> per_source;
  std::map<std::string, std::size_t> per_diagnosis;
  /// transitions[s][(answer at step s+1, answer at step s+2)] for s = 0..5.
  std::array<std::map<std::pair<std::string, std::string>, std::size_t>, kStepCount - 1> transitions;
  /// reasoning_words[s][word count] = number of records.
  std::array<std::map<std::size_t, std::size_t>, kStepCount> reasoning_words;
};

/// Number of tokens after splitting on ASCII whitespace.
std::size_t word_count(std::string_view text);

DatasetStats compute_stats(std::span<const ChainRecord> records);
std::string stats_to_json(const DatasetStats& stats);

}  // namespace stepcot::data
