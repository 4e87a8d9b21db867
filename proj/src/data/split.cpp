// SPDX-License-Identifier: Apache-2.0
#include "stepcot/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace stepcot::data {

namespace {
// Absorbs representation error, e.g. 0.7 * 440 evaluating to 307.99999999999994.
constexpr double kFloorSlack = 1e-9;

std::size_t floor_share(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + kFloorSlack));
}
}  // namespace

SplitCounts split_counts(std::size_t n, const SplitRatios& r) {
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  SplitCounts c;
  c.train = std::min(n, floor_share(r.train, n));
  c.val = std::min(n - c.train, floor_share(r.val, n));
  c.test = n - c.train - c.val;
  return c;
}

SplitManifest stratified_split(std::span<const ChainRecord> records,
                               const std::function<int(const ChainRecord&)>& class_of,
                               const SplitRatios& ratios, std::uint64_t seed) {
  std::map<int, std::vector<std::string>> by_class;
  for (const auto& r : records) by_class[class_of(r)].push_back(r.patient_id);

  SplitManifest m;
  std::mt19937_64 rng(seed);
  for (auto& [cls, ids] : by_class) {
    if (ids.empty()) continue;
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    const SplitCounts c = split_counts(ids.size(), ratios);
    m.per_class[cls] = c;
    auto it = ids.begin();
    m.train.insert(m.train.end(), it, it + static_cast<std::ptrdiff_t>(c.train));
    it += static_cast<std::ptrdiff_t>(c.train);
    m.val.insert(m.val.end(), it, it + static_cast<std::ptrdiff_t>(c.val));
    it += static_cast<std::ptrdiff_t>(c.val);
    m.test.insert(m.test.end(), it, ids.end());
  }
  return m;
}

void write_split_files(const SplitManifest& manifest, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const std::vector<std::string>*> files[] = {
      {"train.csv", &manifest.train}, {"val.csv", &manifest.val}, {"test.csv", &manifest.test}};
  for (const auto& [name, ids] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    for (const auto& id : *ids) out << id << '\n';
  }
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

}  // namespace stepcot::data
