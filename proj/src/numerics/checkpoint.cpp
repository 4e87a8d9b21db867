// SPDX-License-Identifier: Apache-2.0
#include "stepcot/numerics/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stepcot {

using nlohmann::json;

std::string checkpoint_to_json(const ParamList& params) {
  require_unique_names(params);
  json doc = json::object();  // std::map backed: lexicographic keys
  for (const auto& p : params) {
    json entry;
    entry["shape"] = p.tensor.shape();
    entry["data"] = p.tensor.to_vector();
    doc[p.name] = std::move(entry);
  }
  return doc.dump() + "\n";
}

void save_checkpoint(const ParamList& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(params);
}

std::map<std::string, Tensor> parse_checkpoint(const std::string& json_text) {
  const json doc = json::parse(json_text);
  if (!doc.is_object()) throw std::runtime_error("checkpoint: top level must be an object");
  std::map<std::string, Tensor> out;
  for (const auto& [name, entry] : doc.items()) {
    if (!entry.is_object() || !entry.contains("shape") || !entry.contains("data"))
      throw std::runtime_error("checkpoint: entry " + name + " needs shape and data");
    out.emplace(name, Tensor(entry["shape"].get<Shape>(), entry["data"].get<std::vector<double>>()));
  }
  return out;
}

std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

void load_checkpoint(ParamList& params, const std::map<std::string, Tensor>& values,
                     bool allow_extra) {
  std::size_t used = 0;
  for (auto& p : params) {
    auto it = values.find(p.name);
    if (it == values.end()) throw std::runtime_error("checkpoint: missing parameter " + p.name);
    if (it->second.shape() != p.tensor.shape())
      throw std::runtime_error("checkpoint: parameter " + p.name + " has shape " +
                               shape_str(it->second.shape()) + ", model expects " +
                               shape_str(p.tensor.shape()));
    auto dst = p.tensor.mutable_data();
    auto src = it->second.data();
    std::copy(src.begin(), src.end(), dst.begin());
    ++used;
  }
  if (!allow_extra && used != values.size())
    throw std::runtime_error("checkpoint: contains parameters the model does not have");
}

}  // namespace stepcot
