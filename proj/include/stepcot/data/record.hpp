// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stepcot/data/schema.hpp"

namespace stepcot::data {

struct ChainStep {
  std::string step;
  std::string question;
  std::vector<std::string> options;
  std::string answer;
  std::string reasoning;

  bool operator==(const ChainStep&) const = default;
};

struct ChainRecord {
  std::string patient_id;
  std::string image_path;
  std::string origin;
  std::string report;
  std::vector<ChainStep> vqa_chain;

  bool operator==(const ChainRecord&) const = default;
};

// Rule names used in violation reports.
namespace rule {
inline constexpr std::string_view kStructure = "structure";
inline constexpr std::string_view kStepCount = "step_count";
inline constexpr std::string_view kTemplateDrift = "template_drift";
inline constexpr std::string_view kUnknownAnswer = "unknown_answer";
inline constexpr std::string_view kNaCascade = "na_cascade";
inline constexpr std::string_view kDuplicateId = "duplicate_id";
}  // namespace rule

struct Violation {
  std::string record_id;  // "#<index>" when the record has no usable id
  int step = 0;           // 1-based; 0 for record-level violations
  std::string rule;
  std::string detail;
};

struct ValidationResult {
  std::size_t total_records = 0;
  std::vector<ChainRecord> records;  // records without violations
  std::vector<Violation> violations;
};

/// Malformed JSON; `byte_offset` points at the failing input byte.
class JsonParseError : public std::runtime_error {
 public:
  JsonParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Parses a data.json document (a top-level array of records; a single record
/// object is accepted too) and checks every record against the schema.
/// Structural problems become violations, never exceptions.
ValidationResult parse_and_validate(std::string_view json_text,
                                    const StepSchema& schema = StepSchema::standard());

/// Schema checks for one already-parsed record.
std::vector<Violation> validate_record(const ChainRecord& record,
                                       const StepSchema& schema = StepSchema::standard());

/// data.json text with field order patient_id, image_path, origin, report,
/// vqa_chain (and step, question, options, answer, reasoning per step).
std::string serialize_records(std::span<const ChainRecord> records);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace stepcot::data
