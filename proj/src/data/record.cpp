// SPDX-License-Identifier: Apache-2.0
#include "stepcot/data/record.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace stepcot::data {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads one record; returns false (after recording a violation) when the
// JSON shape is not usable.
bool read_record(const json& j, std::size_t index, ChainRecord& out,
                 std::vector<Violation>& violations) {
  std::string id = "#" + std::to_string(index);
  auto fail = [&](int step, std::string detail) {
    violations.push_back({id, step, std::string(rule::kStructure), std::move(detail)});
    return false;
  };
  if (!j.is_object()) return fail(0, "record is not a JSON object");
  if (j.contains("patient_id") && j["patient_id"].is_string()) id = j["patient_id"].get<std::string>();

  for (const char* key : {"patient_id", "image_path", "report"})
    if (!j.contains(key) || !j[key].is_string())
      return fail(0, std::string("missing or non-string field '") + key + "'");
  if (j.contains("origin") && !j["origin"].is_string()) return fail(0, "field 'origin' is not a string");
  if (!j.contains("vqa_chain") || !j["vqa_chain"].is_array())
    return fail(0, "missing or non-array field 'vqa_chain'");

  out.patient_id = j["patient_id"].get<std::string>();
  out.image_path = j["image_path"].get<std::string>();
  out.origin = j.value("origin", std::string());
  out.report = j["report"].get<std::string>();
  out.vqa_chain.clear();

  int step_no = 0;
  for (const auto& s : j["vqa_chain"]) {
    ++step_no;
    if (!s.is_object()) return fail(step_no, "step entry is not an object");
    for (const char* key : {"step", "question", "answer", "reasoning"})
      if (!s.contains(key) || !s[key].is_string())
        return fail(step_no, std::string("missing or non-string field '") + key + "'");
    if (!s.contains("options") || !s["options"].is_array())
      return fail(step_no, "missing or non-array field 'options'");
    ChainStep step;
    step.step = s["step"].get<std::string>();
    step.question = s["question"].get<std::string>();
    for (const auto& o : s["options"]) {
      if (!o.is_string()) return fail(step_no, "non-string option");
      step.options.push_back(StepSchema::normalize(o.get<std::string>()));
    }
    step.answer = StepSchema::normalize(s["answer"].get<std::string>());
    step.reasoning = s["reasoning"].get<std::string>();
    out.vqa_chain.push_back(std::move(step));
  }
  return true;
}

}  // namespace

std::vector<Violation> validate_record(const ChainRecord& record, const StepSchema& schema) {
  std::vector<Violation> out;
  const std::string& id = record.patient_id;
  if (record.vqa_chain.size() != kStepCount) {
    out.push_back({id, 0, std::string(rule::kStepCount),
                   "expected " + std::to_string(kStepCount) + " steps, found " +
                       std::to_string(record.vqa_chain.size())});
    return out;
  }
  for (std::size_t i = 0; i < kStepCount; ++i) {
    const ChainStep& s = record.vqa_chain[i];
    const StepTemplate& t = schema.step(i);
    const int step_no = static_cast<int>(i) + 1;
    if (s.step != t.step_name)
      out.push_back({id, step_no, std::string(rule::kTemplateDrift), "step name '" + s.step + "'"});
    if (s.question != t.question)
      out.push_back({id, step_no, std::string(rule::kTemplateDrift), "question text differs from template"});
    if (s.options != t.options)
      out.push_back({id, step_no, std::string(rule::kTemplateDrift), "options differ from template"});
    const bool known = s.answer == kNotApplicable || s.answer == kNoAnswer ||
                       std::find(t.options.begin(), t.options.end(), s.answer) != t.options.end();
    if (!known)
      out.push_back({id, step_no, std::string(rule::kUnknownAnswer), "answer '" + s.answer + "'"});
  }
  if (record.vqa_chain[0].answer == kNoAbnormality) {
    for (std::size_t i = 1; i <= 5; ++i) {
      const auto& a = record.vqa_chain[i].answer;
      if (a != kNotApplicable)
        out.push_back({id, static_cast<int>(i) + 1, std::string(rule::kNaCascade),
                       "step 1 is '" + std::string(kNoAbnormality) + "' but answer is '" + a + "'"});
    }
  }
  return out;
}

ValidationResult parse_and_validate(std::string_view json_text, const StepSchema& schema) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw JsonParseError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what(), e.byte);
  }
  if (doc.is_object()) doc = json::array({doc});

  ValidationResult result;
  if (!doc.is_array()) {
    result.violations.push_back({"#0", 0, std::string(rule::kStructure), "top level must be an array"});
    return result;
  }
  result.total_records = doc.size();
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    ChainRecord rec;
    if (!read_record(doc[i], i, rec, result.violations)) continue;
    auto v = validate_record(rec, schema);
    if (!seen_ids.insert(rec.patient_id).second)
      v.push_back({rec.patient_id, 0, std::string(rule::kDuplicateId), "patient_id already used"});
    if (v.empty())
      result.records.push_back(std::move(rec));
    else
      result.violations.insert(result.violations.end(), v.begin(), v.end());
  }
  return result;
}

std::string serialize_records(std::span<const ChainRecord> records) {
  ordered_json doc = ordered_json::array();
  for (const auto& r : records) {
    ordered_json j;
    j["patient_id"] = r.patient_id;
    j["image_path"] = r.image_path;
    j["origin"] = r.origin;
    j["report"] = r.report;
    ordered_json chain = ordered_json::array();
    for (const auto& s : r.vqa_chain) {
      ordered_json e;
      e["step"] = s.step;
      e["question"] = s.question;
      e["options"] = s.options;
      e["answer"] = s.answer;
      e["reasoning"] = s.reasoning;
      chain.push_back(std::move(e));
    }
    j["vqa_chain"] = std::move(chain);
    doc.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace stepcot::data
