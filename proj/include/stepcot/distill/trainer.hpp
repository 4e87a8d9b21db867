// SPDX-License-Identifier: Apache-2.0
#pragma once

// Alternating teacher/student training. The first `pretrain_epochs` epochs
// update the teacher alone with summed per-step cross-entropy. Afterwards each
// batch (a) updates the teacher, (b) reruns it without gradients to get
// targets, and (c) updates the student on CE + KD + CH.

#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stepcot/data/feature_table.hpp"
#include "stepcot/data/labels.hpp"
#include "stepcot/distill/config.hpp"
#include "stepcot/metrics/metrics.hpp"
#include "stepcot/student.hpp"
#include "stepcot/teacher.hpp"

namespace stepcot {

struct LabeledFeatures {
  Tensor features;  // [n x raw_dim]
  std::vector<data::LabelVector> labels;
  std::vector<std::string> ids;

  std::size_t size() const { return labels.size(); }
};

LabeledFeatures assemble_examples(std::span<const data::ChainRecord> records,
                                  const data::FeatureTable& table);

/// Labels of step `s` for the given rows.
std::vector<int> step_labels(const LabeledFeatures& data, std::size_t s,
                             std::span<const std::size_t> rows);

metrics::StepReport evaluate_teacher(TeacherModel& teacher, const LabeledFeatures& data,
                                     std::size_t batch_size = 256);
metrics::StepReport evaluate_student(const StudentModel& student, const LabeledFeatures& data,
                                     std::size_t batch_size = 256);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  bool pretrain = false;
  double teacher_ce = 0.0;  // batch means
  double student_total = 0.0;
  double student_ce = 0.0;
  double student_kd = 0.0;
  double student_ch = 0.0;
  std::vector<double> teacher_batch_losses;
  metrics::StepReport teacher_val;
  metrics::StepReport student_val;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  double best_teacher_accuracy = -1.0;
  double best_student_accuracy = -1.0;
  std::size_t best_teacher_epoch = 0;
  std::size_t best_student_epoch = 0;
  std::string best_teacher_checkpoint;  // checkpoint JSON text
  std::string best_student_checkpoint;
};

enum class TrainStage { BeforeTeacherUpdate, AfterTeacherUpdate, BeforeStudentUpdate, AfterStudentUpdate };

struct TrainHooks {
  std::function<void(std::size_t epoch, std::size_t batch, TrainStage stage)> on_stage;
  std::ostream* metrics_log = nullptr;  // one JSON object per epoch
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_, batch_;
};

std::string epoch_log_json(const EpochLog& log);

TrainResult train(const LabeledFeatures& train_set, const LabeledFeatures& val_set,
                  TeacherModel& teacher, StudentModel& student, const DistillConfig& config,
                  const TrainHooks& hooks = {});

}  // namespace stepcot
