// SPDX-License-Identifier: Apache-2.0
#include <random>

#include "doctest.h"
#include "stepcot/encoders.hpp"
#include "stepcot/numerics/ops.hpp"
#include "stepcot/numerics/optim.hpp"
#include "support.hpp"

using namespace stepcot;

namespace {

data::FeatureTable small_table(std::size_t dim, std::mt19937_64& rng) {
  data::FeatureTable t(dim);
  for (const char* p : {"p1", "p2", "p3"}) t.insert(p, test::random_values(dim, rng));
  return t;
}

}  // namespace

TEST_CASE("zeroed prompt table encodes to zeros") {
  std::mt19937_64 rng(1);
  PromptTable table(7, 768, rng);
  table.zero();
  const Tensor t = table.encode();
  CHECK(t.shape() == Shape{7, 768});
  for (double v : t.data()) CHECK(v == 0.0);
}

TEST_CASE("prompt encoding is deterministic between updates") {
  std::mt19937_64 rng(2);
  PromptTable table(7, 16, rng);
  CHECK(table.encode().to_vector() == table.encode().to_vector());
}

TEST_CASE("a loss on one step vector only moves that row") {
  std::mt19937_64 rng(3);
  PromptTable table(7, 8, rng);
  ParamList params;
  table.collect(params, "prompts");
  const auto before = table.encode().to_vector();
  AdamW opt(params, {0.1, 0.9, 0.999, 1e-8, 0.0});
  const std::vector<std::size_t> row = {3};
  const Tensor r = ops::gather_rows(table.encode(), row);
  ops::sum(ops::mul(r, r)).backward();
  opt.step();
  const auto after = table.encode().to_vector();
  for (std::size_t s = 0; s < 7; ++s)
    for (std::size_t j = 0; j < 8; ++j) {
      if (s == 3)
        CHECK(after[s * 8 + j] != before[s * 8 + j]);
      else
        CHECK(after[s * 8 + j] == before[s * 8 + j]);
    }
}

TEST_CASE("identity projection returns raw features") {
  std::mt19937_64 rng(4);
  const auto table = small_table(6, rng);
  Linear teacher(6, 6, rng), student(6, 4, rng);
  teacher.set_identity();
  ImageFeatureSource source(table, teacher, student);
  const std::vector<std::string> paths = {"p2"};
  const Tensor f = source.features(paths, FeatureTarget::Teacher);
  CHECK(f.to_vector() == table.lookup("p2"));
  CHECK(source.features(paths, FeatureTarget::Student).shape() == Shape{1, 4});
}

TEST_CASE("batch lookup equals stacked single lookups") {
  std::mt19937_64 rng(5);
  const auto table = small_table(5, rng);
  ImageFeatureSource source(table, Linear(5, 8, rng), Linear(5, 3, rng));
  const std::vector<std::string> both = {"p3", "p1"}, a = {"p3"}, b = {"p1"};
  for (auto target : {FeatureTarget::Teacher, FeatureTarget::Student}) {
    const auto batch = source.features(both, target).to_vector();
    auto stacked = source.features(a, target).to_vector();
    const auto second = source.features(b, target).to_vector();
    stacked.insert(stacked.end(), second.begin(), second.end());
    CHECK(batch == stacked);
  }
}

TEST_CASE("raw features are frozen") {
  std::mt19937_64 rng(6);
  const auto table = small_table(4, rng);
  Linear teacher(4, 4, rng), student(4, 4, rng);
  ImageFeatureSource source(table, teacher, student);
  const std::vector<std::string> paths = {"p1", "p2"};
  const Tensor raw = source.raw(paths);
  CHECK_FALSE(raw.requires_grad());
  const auto snapshot = table.rows();

  ParamList params;
  teacher.collect(params, "t");
  AdamW opt(params, {});
  for (int i = 0; i < 3; ++i) {
    opt.zero_grad();
    const Tensor f = source.features(paths, FeatureTarget::Teacher);
    ops::sum(ops::mul(f, f)).backward();
    opt.step();
  }
  CHECK(table.rows() == snapshot);
  CHECK_FALSE(raw.has_grad());
}

TEST_CASE("teacher and student projections are independent") {
  std::mt19937_64 rng(7);
  const auto table = small_table(4, rng);
  Linear teacher(4, 4, rng), student(4, 4, rng);
  ImageFeatureSource source(table, teacher, student);
  const auto student_before = student.weight().to_vector();
  ParamList params;
  teacher.collect(params, "t");
  AdamW opt(params, {});
  const std::vector<std::string> paths = {"p1"};
  ops::sum(source.features(paths, FeatureTarget::Teacher)).backward();
  opt.step();
  CHECK(student.weight().to_vector() == student_before);
  CHECK_FALSE(student.weight().has_grad());
}

TEST_CASE("unknown paths are reported by name") {
  std::mt19937_64 rng(8);
  const auto table = small_table(3, rng);
  const std::vector<std::string> paths = {"p1", "nowhere.png"};
  try {
    lookup_features(table, paths);
    FAIL("unknown path accepted");
  } catch (const std::out_of_range& e) {
    CHECK(std::string(e.what()).find("nowhere.png") != std::string::npos);
  }
}
