// SPDX-License-Identifier: Apache-2.0
#include "stepcot/distill/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "stepcot/data/record.hpp"

namespace stepcot {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(out))
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw std::invalid_argument("config: " + key + " expects a non-negative integer, got '" + v + "'");
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Field {
  std::string key;
  std::function<void(DistillConfig&, const std::string&)> set;
  std::function<std::string(const DistillConfig&)> get;
};

#define STEPCOT_DOUBLE(name)                                                       \
  Field{#name, [](DistillConfig& c, const std::string& v) { c.name = parse_double(#name, v); }, \
        [](const DistillConfig& c) { return fmt(c.name); }}
#define STEPCOT_SIZE(name)                                                         \
  Field{#name,                                                                     \
        [](DistillConfig& c, const std::string& v) {                               \
          c.name = static_cast<decltype(c.name)>(parse_uint(#name, v));            \
        },                                                                         \
        [](const DistillConfig& c) { return std::to_string(c.name); }}
#define STEPCOT_STRING(name)                                                       \
  Field{#name, [](DistillConfig& c, const std::string& v) { c.name = v; },         \
        [](const DistillConfig& c) { return c.name; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      STEPCOT_DOUBLE(temperature),
      STEPCOT_DOUBLE(alpha_kd),
      STEPCOT_DOUBLE(alpha_ch),
      STEPCOT_SIZE(proj_dim),
      STEPCOT_DOUBLE(epsilon),
      Field{"kl_direction",
            [](DistillConfig& c, const std::string& v) {
              if (v == "teacher_target")
                c.kl_direction = KlDirection::TeacherTarget;
              else if (v == "student_target")
                c.kl_direction = KlDirection::StudentTarget;
              else
                throw std::invalid_argument(
                    "config: kl_direction expects teacher_target or student_target, got '" + v + "'");
            },
            [](const DistillConfig& c) {
              return std::string(c.kl_direction == KlDirection::TeacherTarget ? "teacher_target"
                                                                              : "student_target");
            }},
      STEPCOT_SIZE(epochs),
      STEPCOT_SIZE(pretrain_epochs),
      STEPCOT_SIZE(batch_size),
      STEPCOT_DOUBLE(teacher_lr),
      STEPCOT_DOUBLE(student_lr),
      STEPCOT_DOUBLE(weight_decay),
      STEPCOT_SIZE(seed),
      STEPCOT_SIZE(teacher_hidden),
      STEPCOT_SIZE(student_hidden),
      STEPCOT_SIZE(heads),
      STEPCOT_SIZE(gat_layers),
      STEPCOT_DOUBLE(dropout),
      STEPCOT_STRING(data),
      STEPCOT_STRING(features),
      STEPCOT_STRING(split_dir),
      STEPCOT_STRING(out_dir),
  };
  return table;
}

#undef STEPCOT_DOUBLE
#undef STEPCOT_SIZE
#undef STEPCOT_STRING

}  // namespace

void DistillConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (!(temperature > 0.0)) fail("temperature must be > 0");
  if (alpha_kd < 0.0 || alpha_ch < 0.0) fail("alpha_kd and alpha_ch must be >= 0");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (proj_dim == 0) fail("proj_dim must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (pretrain_epochs > epochs) fail("pretrain_epochs exceeds epochs");
  if (!(teacher_lr > 0.0) || !(student_lr > 0.0)) fail("learning rates must be > 0");
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (heads == 0 || teacher_hidden % heads != 0) fail("teacher_hidden must be divisible by heads");
  if (student_hidden == 0 || gat_layers == 0) fail("model sizes must be positive");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_config_value(DistillConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (f.key == key) return f.set(config, value);
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

DistillConfig parse_config(const std::string& text, DistillConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

DistillConfig load_config(const std::string& path, DistillConfig base) {
  return parse_config(data::read_text_file(path), std::move(base));
}

std::map<std::string, std::string> config_to_map(const DistillConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& f : fields()) out[f.key] = f.get(config);
  return out;
}

}  // namespace stepcot
