// SPDX-License-Identifier: Apache-2.0
#include "stepcot/data/stats.hpp"

#include <stdexcept>

#include "json.hpp"

namespace stepcot::data {

std::size_t word_count(std::string_view text) {
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

DatasetStats compute_stats(std::span<const ChainRecord> records) {
  DatasetStats st;
  st.records = records.size();
  for (const auto& r : records) {
    if (r.vqa_chain.size() != kStepCount)
      throw std::invalid_argument("compute_stats: record " + r.patient_id + " is not validated");
    ++st.per_source[r.origin];
    ++st.per_diagnosis[r.vqa_chain.back().answer];
    for (std::size_t s = 0; s + 1 < kStepCount; ++s)
      ++st.transitions[s][{r.vqa_chain[s].answer, r.vqa_chain[s + 1].answer}];
    for (std::size_t s = 0; s < kStepCount; ++s)
      ++st.reasoning_words[s][word_count(r.vqa_chain[s].reasoning)];
  }
  return st;
}

std::string stats_to_json(const DatasetStats& st) {
  nlohmann::ordered_json j;
  j["records"] = st.records;
  j["per_source"] = st.per_source;
  j["per_diagnosis"] = st.per_diagnosis;
  auto transitions = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < st.transitions.size(); ++s) {
    for (const auto& [edge, count] : st.transitions[s])
      transitions.push_back({{"from_step", s + 1},
                             {"to_step", s + 2},
                             {"from", edge.first},
                             {"to", edge.second},
                             {"count", count}});
  }
  j["transitions"] = std::move(transitions);
  auto words = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < st.reasoning_words.size(); ++s) {
    nlohmann::ordered_json hist = nlohmann::ordered_json::object();
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& [len, count] : st.reasoning_words[s]) {
      hist[std::to_string(len)] = count;
      total += static_cast<double>(len * count);
      n += count;
    }
    words.push_back({{"step", s + 1}, {"mean_words", n ? total / static_cast<double>(n) : 0.0},
                     {"histogram", std::move(hist)}});
  }
  j["reasoning_words"] = std::move(words);
  return j.dump(2) + "\n";
}

}  // namespace stepcot::data
