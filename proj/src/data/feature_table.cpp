// SPDX-License-Identifier: Apache-2.0
#include "stepcot/data/feature_table.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "stepcot/data/record.hpp"

namespace stepcot::data {

void FeatureTable::insert(const std::string& path, std::vector<double> features) {
  if (dim_ == 0) dim_ = features.size();
  if (features.size() != dim_)
    throw std::invalid_argument("feature table: '" + path + "' has " +
                                std::to_string(features.size()) + " values, expected " +
                                std::to_string(dim_));
  for (double v : features)
    if (!std::isfinite(v)) throw std::invalid_argument("feature table: non-finite value for '" + path + "'");
  rows_[path] = std::move(features);
}

const std::vector<double>& FeatureTable::lookup(const std::string& path) const {
  auto it = rows_.find(path);
  if (it == rows_.end()) throw std::out_of_range("no image features for path '" + path + "'");
  return it->second;
}

std::string FeatureTable::to_json() const {
  nlohmann::ordered_json j;
  j["dim"] = dim_;
  nlohmann::ordered_json f = nlohmann::ordered_json::object();
  for (const auto& [path, v] : rows_) f[path] = v;
  j["features"] = std::move(f);
  return j.dump() + "\n";
}

std::string FeatureTable::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "image_path";
  for (std::size_t i = 0; i < dim_; ++i) os << ",f" << i;
  os << '\n';
  for (const auto& [path, v] : rows_) {
    if (path.find(',') != std::string::npos)
      throw std::invalid_argument("feature table: CSV cannot hold path '" + path + "'");
    os << path;
    for (double x : v) os << ',' << x;
    os << '\n';
  }
  return os.str();
}

FeatureTable FeatureTable::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_object() || !j.contains("features") || !j["features"].is_object())
    throw std::invalid_argument("feature table: expected {\"dim\": d, \"features\": {...}}");
  FeatureTable t(j.value("dim", std::size_t{0}));
  for (const auto& [path, v] : j["features"].items()) t.insert(path, v.get<std::vector<double>>());
  return t;
}

FeatureTable FeatureTable::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("feature table: empty CSV");
  FeatureTable t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    for (;;) {
      auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    std::vector<double> v;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), x);
      if (ec != std::errc() || ptr != cells[i].data() + cells[i].size())
        throw std::invalid_argument("feature table: bad number on line " + std::to_string(line_no));
      v.push_back(x);
    }
    t.insert(std::string(cells[0]), std::move(v));
  }
  return t;
}

FeatureTable FeatureTable::load(const std::filesystem::path& path) {
  const std::string text = read_text_file(path.string());
  return path.extension() == ".csv" ? from_csv(text) : from_json(text);
}

void FeatureTable::save(const std::filesystem::path& path) const {
  write_text_file(path.string(), path.extension() == ".csv" ? to_csv() : to_json());
}

}  // namespace stepcot::data
