// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <filesystem>
#include "json.hpp"
#include <random>
#include <set>

#include "doctest.h"
#include "stepcot/data/feature_table.hpp"
#include "stepcot/data/labels.hpp"
#include "stepcot/data/record.hpp"
#include "stepcot/data/split.hpp"
#include "stepcot/data/stats.hpp"
#include "stepcot/data/synthetic.hpp"
#include "support.hpp"

using namespace stepcot::data;
using nlohmann::json;

namespace {

std::string fixture_text() { return read_text_file(STEPCOT_TEST_DATA_DIR "/sample_record.json"); }

json fixture() { return json::parse(fixture_text()); }

std::vector<Violation> violations_of(const json& record) {
  return parse_and_validate(json::array({record}).dump()).violations;
}

bool has_violation(const std::vector<Violation>& vs, std::string_view rule_name, int step) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.rule == rule_name && v.step == step; });
}

ChainRecord synthetic_record(int diagnosis, const std::string& id, const std::string& origin = "synthetic") {
  const auto& schema = StepSchema::standard();
  ChainRecord r;
  r.patient_id = id;
  r.image_path = id + ".png";
  r.origin = origin;
  r.report = "synthetic";
  for (std::size_t s = 0; s < kStepCount; ++s) {
    const auto& t = schema.step(s);
    r.vqa_chain.push_back({t.step_name, t.question, t.options, std::string(diagnosis_chains()[diagnosis][s]),
                           "reason " + std::to_string(s)});
  }
  return r;
}

}  // namespace

TEST_CASE("schema class counts") {
  const auto counts = StepSchema::standard().class_counts();
  CHECK(counts == std::vector<std::size_t>{5, 4, 6, 7, 5, 7, 10});
  CHECK(StepSchema::standard().step(6).options.back() == "Normal");
  CHECK(StepSchema::standard().step(6).options[7] == "Pneumothorax");
  CHECK(StepSchema::normalize("G. Pneumonia") == "Pneumonia");
  CHECK(StepSchema::normalize("Mass") == "Mass");
}

TEST_CASE("the sample record validates cleanly") {
  const auto result = parse_and_validate(fixture_text());
  CHECK(result.total_records == 1);
  CHECK(result.violations.empty());
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].vqa_chain[0].answer == "No abnormality");
}

TEST_CASE("na cascade violation is reported at the offending step") {
  json r = fixture();
  r["vqa_chain"][2]["answer"] = "Consolidation";
  const auto vs = violations_of(r);
  CHECK(has_violation(vs, rule::kNaCascade, 3));
  CHECK(vs.front().record_id == "1");
}

TEST_CASE("missing step is a step_count violation") {
  json r = fixture();
  r["vqa_chain"].erase(6);
  CHECK(has_violation(violations_of(r), rule::kStepCount, 0));
}

TEST_CASE("question text drift is reported") {
  json r = fixture();
  r["vqa_chain"][3]["question"] = "Where is it?";
  CHECK(has_violation(violations_of(r), rule::kTemplateDrift, 4));
}

TEST_CASE("answers outside the option list are reported") {
  json r = fixture();
  r["vqa_chain"][6]["answer"] = "Fracture";
  CHECK(has_violation(violations_of(r), rule::kUnknownAnswer, 7));
}

TEST_CASE("structural garbage becomes violations, not exceptions") {
  CHECK_NOTHROW(parse_and_validate("[1, \"x\", {\"patient_id\": 3}]"));
  const auto result = parse_and_validate("[1, {\"patient_id\": \"a\"}]");
  CHECK(result.records.empty());
  CHECK(result.violations.size() >= 2);
}

TEST_CASE("duplicate ids are reported") {
  const json r = fixture();
  const auto result = parse_and_validate(json::array({r, r}).dump());
  CHECK(result.records.size() == 1);
  CHECK(has_violation(result.violations, rule::kDuplicateId, 0));
}

TEST_CASE("malformed json reports a byte offset") {
  const std::string text = "[{\"patient_id\": \"1\",, }]";
  try {
    parse_and_validate(text);
    FAIL("malformed json accepted");
  } catch (const JsonParseError& e) {
    CHECK(e.byte_offset() > 0);
    CHECK(e.byte_offset() <= text.size());
  }
}

TEST_CASE("label encoding examples") {
  const auto& schema = StepSchema::standard();
  CHECK(encode_answer(schema.step(6), "Normal") == 8);
  CHECK(encode_answer(schema.step(1), "N/A") == 3);
  CHECK(encode_answer(schema.step(3), "No Answer") == kMissingLabel);
  CHECK(encode_answer(schema.step(6), "G. Pneumonia") == 6);
  CHECK_THROWS(encode_answer(schema.step(0), "Maybe"));

  const auto result = parse_and_validate(fixture_text());
  const LabelVector labels = encode_labels(result.records.at(0));
  CHECK(labels == LabelVector{0, 3, 5, 6, 4, 6, 8});
}

TEST_CASE("decode inverts encode for every option and N/A") {
  for (const auto& step : StepSchema::standard().steps()) {
    for (const auto& opt : step.options) CHECK(decode_label(step, encode_answer(step, opt)) == opt);
    CHECK(decode_label(step, step.not_applicable_index()) == std::string(kNotApplicable));
    CHECK_FALSE(decode_label(step, kMissingLabel).has_value());
  }
}

TEST_CASE("valid records imply N/A labels after a normal first step") {
  for (int d = 0; d < static_cast<int>(kDiagnosisCount); ++d) {
    const auto r = synthetic_record(d, "x");
    REQUIRE(validate_record(r).empty());
    const auto labels = encode_labels(r);
    for (std::size_t s = 0; s < kStepCount; ++s)
      CHECK(labels[s] >= 0);
    if (r.vqa_chain[0].answer == kNoAbnormality)
      for (std::size_t s = 1; s <= 5; ++s) CHECK(labels[s] == StepSchema::standard().step(s).not_applicable_index());
  }
}

TEST_CASE("serialize then parse is the identity") {
  std::vector<ChainRecord> records;
  for (int d = 0; d < 9; ++d) records.push_back(synthetic_record(d, "id" + std::to_string(d), d % 2 ? "a" : "b"));
  records[3].vqa_chain[4].answer = "No Answer";
  records[3].report = "quotes \" and unicode é";
  const auto result = parse_and_validate(serialize_records(records));
  CHECK(result.violations.empty());
  CHECK(result.records == records);
}

TEST_CASE("split counts follow floor, floor, remainder") {
  CHECK(split_counts(6787) == SplitCounts{4750, 1018, 1019});
  CHECK(split_counts(41) == SplitCounts{28, 6, 7});
  CHECK(split_counts(1) == SplitCounts{0, 0, 1});
  CHECK(split_counts(0) == SplitCounts{0, 0, 0});
}

TEST_CASE("stratified split is disjoint, exhaustive and deterministic") {
  std::mt19937_64 rng(11);
  std::vector<ChainRecord> records;
  for (int i = 0; i < 300; ++i)
    records.push_back(synthetic_record(static_cast<int>(rng() % 9), "p" + std::to_string(i)));
  auto class_of = [](const ChainRecord& r) { return diagnosis_class(r); };
  const auto m = stratified_split(records, class_of, {}, 5);

  std::set<std::string> all;
  for (const auto* list : {&m.train, &m.val, &m.test})
    for (const auto& id : *list) CHECK(all.insert(id).second);
  CHECK(all.size() == records.size());

  for (const auto& [cls, counts] : m.per_class) {
    const std::size_t n = counts.train + counts.val + counts.test;
    CHECK(counts == split_counts(n));
    CHECK(std::abs(static_cast<double>(counts.train) / n - 0.70) < 1.0 / n);
  }

  const auto again = stratified_split(records, class_of, {}, 5);
  CHECK(again.train == m.train);
  CHECK(again.test == m.test);
  auto reversed = records;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(stratified_split(reversed, class_of, {}, 5).val == m.val);
  CHECK(stratified_split(records, class_of, {}, 6).train != m.train);
  CHECK(stratified_split(std::vector<ChainRecord>{}, class_of, {}, 5).train.empty());
}

TEST_CASE("split files round trip") {
  test::TempDir dir("split");
  SplitManifest m;
  m.train = {"a", "b"};
  m.val = {"c"};
  m.test = {};
  write_split_files(m, dir.path());
  CHECK(read_id_list(dir.path() / "train.csv") == m.train);
  CHECK(read_id_list(dir.path() / "val.csv") == m.val);
  CHECK(read_id_list(dir.path() / "test.csv").empty());
  CHECK(read_text_file(dir.file("train.csv")) == "a\nb\n");
}

TEST_CASE("word count splits on whitespace only") {
  CHECK(word_count("No abnormalities exist, making distribution patterns irrelevant.") == 7);
  CHECK(word_count("  a\tb\n c ") == 3);
  CHECK(word_count("") == 0);
}

TEST_CASE("stats of a single normal record") {
  const auto records = parse_and_validate(fixture_text()).records;
  const auto stats = compute_stats(records);
  CHECK(stats.records == 1);
  CHECK(stats.per_diagnosis.at("Normal") == 1);
  const std::pair<std::string, std::string> first{"No abnormality", "N/A"}, last{"N/A", "Normal"};
  for (std::size_t s = 0; s < kStepCount - 1; ++s) {
    REQUIRE(stats.transitions[s].size() == 1);
    CHECK(stats.transitions[s].begin()->second == 1);
  }
  CHECK(stats.transitions[0].begin()->first == first);
  CHECK(stats.transitions[5].begin()->first == last);
  CHECK(stats.reasoning_words[1].at(7) == 1);
}

TEST_CASE("stats count sources and transitions sum to record count") {
  std::vector<ChainRecord> records;
  for (int i = 0; i < 20; ++i) records.push_back(synthetic_record(i % 9, std::to_string(i), i < 2 ? "o" + std::to_string(i) : "bulk"));
  const auto stats = compute_stats(records);
  CHECK(stats.per_source.at("o0") == 1);
  CHECK(stats.per_source.at("o1") == 1);
  CHECK(stats.per_source.at("bulk") == 18);
  for (const auto& table : stats.transitions) {
    std::size_t total = 0;
    for (const auto& [k, n] : table) total += n;
    CHECK(total == records.size());
  }
  CHECK(json::parse(stats_to_json(stats)).is_object());
}

TEST_CASE("synthetic records validate and noise-free features are prototypes") {
  SyntheticOptions o;
  o.n = 200;
  o.noise = 0.0;
  o.seed = 3;
  const auto ds = generate_synthetic(o);
  const auto result = parse_and_validate(serialize_records(ds.records));
  CHECK(result.violations.empty());
  CHECK(result.records.size() == 200);
  std::map<int, std::vector<double>> seen;
  for (const auto& r : ds.records) {
    const int c = diagnosis_class(r);
    const auto& f = ds.features.lookup(r.image_path);
    CHECK(f == class_prototype(c, o.feature_dim));
    if (seen.count(c)) CHECK(seen[c] == f);
    seen[c] = f;
  }
  CHECK(seen.size() == kDiagnosisCount);
}

TEST_CASE("synthetic generator rejects small feature dims") {
  SyntheticOptions o;
  o.feature_dim = 9;
  CHECK_THROWS_AS(generate_synthetic(o), std::invalid_argument);
  o.feature_dim = 10;
  CHECK_NOTHROW(generate_synthetic(o));
  o.n = 0;
  CHECK_THROWS_AS(generate_synthetic(o), std::invalid_argument);
}

TEST_CASE("nearest prototype recovers synthetic diagnoses") {
  SyntheticOptions o;
  o.n = 1000;
  o.noise = 0.1;
  o.seed = 7;
  const auto ds = generate_synthetic(o);
  std::size_t correct = 0;
  for (const auto& r : ds.records) {
    const auto& f = ds.features.lookup(r.image_path);
    int best = -1;
    double best_d = 0.0;
    for (int c = 0; c < static_cast<int>(kDiagnosisCount); ++c) {
      const auto p = class_prototype(c, o.feature_dim);
      double d = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) d += (f[i] - p[i]) * (f[i] - p[i]);
      if (best < 0 || d < best_d) best = c, best_d = d;
    }
    correct += best == diagnosis_class(r);
  }
  CHECK(static_cast<double>(correct) / o.n >= 0.99);
}

TEST_CASE("feature tables round trip through json and csv") {
  FeatureTable t(3);
  t.insert("a.png", {1.0, -2.5, 1e-17});
  t.insert("b,c.png", {0.1, 0.2, 0.3});
  CHECK_THROWS(t.insert("bad", {1.0}));
  const auto j = FeatureTable::from_json(t.to_json());
  CHECK(j.rows() == t.rows());
  CHECK_THROWS_AS(t.lookup("missing"), std::out_of_range);

  FeatureTable plain(2);
  plain.insert("x", {0.125, 3.0});
  CHECK(FeatureTable::from_csv(plain.to_csv()).rows() == plain.rows());

  test::TempDir dir("features");
  t.save(dir.path() / "f.json");
  CHECK(FeatureTable::load(dir.path() / "f.json").rows() == t.rows());
}
