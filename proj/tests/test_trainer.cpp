// SPDX-License-Identifier: Apache-2.0
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "doctest.h"
#include "stepcot/data/synthetic.hpp"
#include "stepcot/distill/trainer.hpp"
#include "stepcot/numerics/checkpoint.hpp"

using namespace stepcot;

namespace {

struct Fixture {
  LabeledFeatures train_set, val_set;
  DistillConfig config;
  TeacherConfig teacher;
  StudentConfig student;
};

Fixture make_fixture(double noise, std::size_t n = 64) {
  data::SyntheticOptions o;
  o.n = n;
  o.feature_dim = 12;
  o.noise = noise;
  o.seed = 21;
  const auto ds = data::generate_synthetic(o);
  const std::size_t cut = n * 3 / 4;
  Fixture f;
  f.train_set = assemble_examples(std::span(ds.records).first(cut), ds.features);
  f.val_set = assemble_examples(std::span(ds.records).subspan(cut), ds.features);
  f.config.teacher_hidden = 16;
  f.config.student_hidden = 12;
  f.config.proj_dim = 8;
  f.config.batch_size = 8;
  f.config.teacher_lr = 1e-3;
  f.config.student_lr = 1e-3;
  f.config.epochs = 3;
  f.config.pretrain_epochs = 1;
  f.config.seed = 5;
  f.teacher.raw_dim = f.student.raw_dim = 12;
  f.teacher.hidden = 16;
  f.student.hidden = 12;
  f.student.proj_dim = 8;
  f.teacher.seed = 1;
  f.student.seed = 2;
  return f;
}

std::vector<std::vector<double>> snapshot(const ParamList& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.push_back(p.tensor.to_vector());
  return out;
}

}  // namespace

TEST_CASE("assembled examples carry labels and features") {
  const auto f = make_fixture(0.0, 16);
  CHECK(f.train_set.size() == 12);
  CHECK(f.train_set.features.shape() == Shape{12, 12});
  const std::vector<std::size_t> rows = {0, 1};
  CHECK(step_labels(f.train_set, 6, rows).size() == 2);
}

TEST_CASE("teacher loss falls within the first epoch on noise-free data") {
  auto f = make_fixture(0.0, 160);
  f.config.epochs = 1;
  TeacherModel teacher(f.teacher);
  StudentModel student(f.student);
  const auto result = train(f.train_set, f.val_set, teacher, student, f.config);
  const auto& losses = result.epochs.at(0).teacher_batch_losses;
  REQUIRE(losses.size() >= 6);
  const double start = (losses[0] + losses[1] + losses[2]) / 3.0;
  const std::size_t k = losses.size();
  const double end = (losses[k - 1] + losses[k - 2] + losses[k - 3]) / 3.0;
  CHECK(end < start);
}

TEST_CASE("student is untouched during teacher pretraining") {
  auto f = make_fixture(0.1);
  f.config.epochs = 2;
  f.config.pretrain_epochs = 2;
  TeacherModel teacher(f.teacher);
  StudentModel student(f.student);
  const auto before = snapshot(student.parameters());
  const auto teacher_before = snapshot(teacher.parameters());
  bool student_stage = false;
  TrainHooks hooks;
  hooks.on_stage = [&](std::size_t, std::size_t, TrainStage st) {
    student_stage |= st == TrainStage::BeforeStudentUpdate || st == TrainStage::AfterStudentUpdate;
  };
  const auto result = train(f.train_set, f.val_set, teacher, student, f.config, hooks);
  CHECK_FALSE(student_stage);
  CHECK(snapshot(student.parameters()) == before);
  CHECK(snapshot(teacher.parameters()) != teacher_before);
  CHECK(result.epochs.at(0).pretrain);
  CHECK(result.epochs.at(1).pretrain);
}

TEST_CASE("teacher is bit-identical across every student update") {
  auto f = make_fixture(0.1);
  TeacherModel teacher(f.teacher);
  StudentModel student(f.student);
  std::vector<std::vector<double>> held;
  std::size_t checked = 0, mismatches = 0;
  TrainHooks hooks;
  hooks.on_stage = [&](std::size_t, std::size_t, TrainStage st) {
    if (st == TrainStage::BeforeStudentUpdate) held = snapshot(teacher.parameters());
    if (st == TrainStage::AfterStudentUpdate) {
      ++checked;
      mismatches += snapshot(teacher.parameters()) != held;
    }
  };
  train(f.train_set, f.val_set, teacher, student, f.config, hooks);
  CHECK(checked > 0);
  CHECK(mismatches == 0);
}

TEST_CASE("student loss leaves no gradient on teacher parameters") {
  auto f = make_fixture(0.1);
  TeacherModel teacher(f.teacher);
  StudentModel student(f.student);
  std::size_t dirty = 0;
  TrainHooks hooks;
  hooks.on_stage = [&](std::size_t, std::size_t, TrainStage st) {
    if (st == TrainStage::BeforeStudentUpdate)
      for (auto& p : teacher.parameters()) p.tensor.zero_grad();
    if (st == TrainStage::AfterStudentUpdate)
      for (const auto& p : teacher.parameters())
        for (double g : p.tensor.grad()) dirty += g != 0.0;
  };
  train(f.train_set, f.val_set, teacher, student, f.config, hooks);
  CHECK(dirty == 0);
}

TEST_CASE("equal seeds give bit-identical checkpoints and logs") {
  auto f = make_fixture(0.1);
  TeacherModel t1(f.teacher), t2(f.teacher);
  StudentModel s1(f.student), s2(f.student);
  std::ostringstream log1, log2;
  TrainHooks h1, h2;
  h1.metrics_log = &log1;
  h2.metrics_log = &log2;
  const auto r1 = train(f.train_set, f.val_set, t1, s1, f.config, h1);
  const auto r2 = train(f.train_set, f.val_set, t2, s2, f.config, h2);
  CHECK(r1.best_teacher_checkpoint == r2.best_teacher_checkpoint);
  CHECK(r1.best_student_checkpoint == r2.best_student_checkpoint);
  CHECK(checkpoint_to_json(t1.parameters()) == checkpoint_to_json(t2.parameters()));
  CHECK(log1.str() == log2.str());

  f.config.seed = 6;
  TeacherModel t3(f.teacher);
  StudentModel s3(f.student);
  train(f.train_set, f.val_set, t3, s3, f.config);
  CHECK(checkpoint_to_json(t3.parameters()) != checkpoint_to_json(t1.parameters()));
}

TEST_CASE("metrics log has one json object per epoch") {
  auto f = make_fixture(0.1);
  TeacherModel teacher(f.teacher);
  StudentModel student(f.student);
  std::ostringstream log;
  TrainHooks hooks;
  hooks.metrics_log = &log;
  const auto result = train(f.train_set, f.val_set, teacher, student, f.config, hooks);
  std::istringstream in(log.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("epoch") == count + 1);
    CHECK(j.contains("teacher"));
    CHECK(j.contains("student"));
    CHECK(j.contains("losses"));
    ++count;
  }
  CHECK(count == f.config.epochs);
  CHECK(result.best_teacher_epoch >= 1);
  CHECK(result.best_student_epoch > f.config.pretrain_epochs);
}

TEST_CASE("a best checkpoint loads back into a fresh model") {
  auto f = make_fixture(0.1);
  TeacherModel teacher(f.teacher);
  StudentModel student(f.student);
  const auto result = train(f.train_set, f.val_set, teacher, student, f.config);
  StudentModel fresh(f.student);
  auto params = fresh.parameters();
  load_checkpoint(params, parse_checkpoint(result.best_student_checkpoint));
  const auto report = evaluate_student(fresh, f.val_set);
  CHECK(report.mean_accuracy() == doctest::Approx(result.best_student_accuracy).epsilon(1e-12));
}

TEST_CASE("divergence aborts with the batch index") {
  auto f = make_fixture(0.1);
  f.config.teacher_lr = 1e300;
  f.config.pretrain_epochs = 1;
  TeacherModel teacher(f.teacher);
  StudentModel student(f.student);
  try {
    train(f.train_set, f.val_set, teacher, student, f.config);
    FAIL("training with an absurd learning rate did not diverge");
  } catch (const TrainingDiverged& e) {
    CHECK(e.epoch() == 1);
    CHECK(std::string(e.what()).find("batch " + std::to_string(e.batch())) != std::string::npos);
  }
}

TEST_CASE("train rejects empty splits and mismatched projection widths") {
  auto f = make_fixture(0.1, 16);
  TeacherModel teacher(f.teacher);
  StudentModel student(f.student);
  CHECK_THROWS_AS(train(LabeledFeatures{}, f.val_set, teacher, student, f.config), std::invalid_argument);
  f.config.proj_dim = 9;
  CHECK_THROWS_AS(train(f.train_set, f.val_set, teacher, student, f.config), std::invalid_argument);
}
