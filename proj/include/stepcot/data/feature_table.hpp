// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace stepcot::data {

/// image_path -> raw feature vector of a fixed dimension.
///
/// File formats (chosen by extension):
///   .json  {"dim": d, "features": {"<image_path>": [f0, ..., f(d-1)], ...}}
///   .csv   header "image_path,f0,...,f(d-1)", then one row per image
class FeatureTable {
 public:
  explicit FeatureTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool contains(const std::string& path) const { return rows_.count(path) != 0; }

  /// Throws on dimension mismatch or non-finite values.
  void insert(const std::string& path, std::vector<double> features);
  /// Throws std::out_of_range naming the path when it is unknown.
  const std::vector<double>& lookup(const std::string& path) const;

  const std::map<std::string, std::vector<double>>& rows() const { return rows_; }

  std::string to_json() const;
  std::string to_csv() const;
  static FeatureTable from_json(const std::string& text);
  static FeatureTable from_csv(const std::string& text);

  static FeatureTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>> rows_;
};

}  // namespace stepcot::data
