// SPDX-License-Identifier: Apache-2.0
#include "stepcot/distill/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "stepcot/distill/losses.hpp"
#include "stepcot/numerics/checkpoint.hpp"
#include "stepcot/numerics/ops.hpp"
#include "stepcot/numerics/optim.hpp"

namespace stepcot {

namespace {

Tensor rows_of(const Tensor& x, std::span<const std::size_t> rows) {
  NoGradGuard guard;
  return ops::gather_rows(x, rows);
}

std::vector<std::string> step_names() {
  std::vector<std::string> names;
  for (const auto& s : data::StepSchema::standard().steps()) names.push_back(s.step_name);
  return names;
}

template <class Forward>
metrics::StepReport evaluate(const LabeledFeatures& data, std::size_t batch_size, Forward forward) {
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty split");
  NoGradGuard guard;
  std::vector<std::vector<double>> probs(data::kStepCount);
  std::size_t width[data::kStepCount] = {};
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<std::size_t> rows(std::min(batch_size, data.size() - start));
    std::iota(rows.begin(), rows.end(), start);
    const std::vector<Tensor> logits = forward(rows_of(data.features, rows));
    for (std::size_t s = 0; s < data::kStepCount; ++s) {
      const Tensor p = ops::softmax(logits[s], 1);
      width[s] = p.size(1);
      probs[s].insert(probs[s].end(), p.data().begin(), p.data().end());
    }
  }
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  metrics::StepReport report;
  report.step_names = step_names();
  for (std::size_t s = 0; s < data::kStepCount; ++s) {
    const Tensor p({data.size(), width[s]}, std::move(probs[s]));
    report.steps.push_back(metrics::per_step_metrics(p, step_labels(data, s, all), data::kMissingLabel));
  }
  return report;
}

void require_finite(double v, std::size_t epoch, std::size_t batch, const char* what) {
  if (!std::isfinite(v))
    throw TrainingDiverged(epoch, batch,
                           std::string("train: non-finite ") + what + " at epoch " +
                               std::to_string(epoch) + ", batch " + std::to_string(batch));
}

}  // namespace

LabeledFeatures assemble_examples(std::span<const data::ChainRecord> records,
                                  const data::FeatureTable& table) {
  LabeledFeatures out;
  std::vector<double> values;
  values.reserve(records.size() * table.dim());
  for (const auto& r : records) {
    const auto& f = table.lookup(r.image_path);
    values.insert(values.end(), f.begin(), f.end());
    out.labels.push_back(data::encode_labels(r));
    out.ids.push_back(r.patient_id);
  }
  out.features = Tensor({records.size(), table.dim()}, std::move(values));
  return out;
}

std::vector<int> step_labels(const LabeledFeatures& data, std::size_t s,
                             std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(data.labels.at(r).at(s));
  return out;
}

metrics::StepReport evaluate_teacher(TeacherModel& teacher, const LabeledFeatures& data,
                                     std::size_t batch_size) {
  return evaluate(data, batch_size, [&](const Tensor& x) { return teacher.forward(x, false).logits; });
}

metrics::StepReport evaluate_student(const StudentModel& student, const LabeledFeatures& data,
                                     std::size_t batch_size) {
  return evaluate(data, batch_size, [&](const Tensor& x) { return student.forward(x, false).logits; });
}

std::string epoch_log_json(const EpochLog& log) {
  nlohmann::ordered_json j;
  j["epoch"] = log.epoch;
  j["phase"] = log.pretrain ? "pretrain" : "distill";
  j["losses"] = {{"teacher_ce", log.teacher_ce},
                 {"student_total", log.student_total},
                 {"student_ce", log.student_ce},
                 {"student_kd", log.student_kd},
                 {"student_ch", log.student_ch}};
  j["teacher"] = nlohmann::ordered_json::parse(metrics::report_to_json(log.teacher_val, -1));
  j["student"] = nlohmann::ordered_json::parse(metrics::report_to_json(log.student_val, -1));
  return j.dump();
}

TrainResult train(const LabeledFeatures& train_set, const LabeledFeatures& val_set,
                  TeacherModel& teacher, StudentModel& student, const DistillConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  if (train_set.size() == 0 || val_set.size() == 0)
    throw std::invalid_argument("train: train and validation splits must be nonempty");
  if (student.config().proj_dim != config.proj_dim)
    throw std::invalid_argument("train: student CH projection width " +
                                std::to_string(student.config().proj_dim) + " differs from proj_dim " +
                                std::to_string(config.proj_dim));

  std::mt19937_64 rng(config.seed);
  std::mt19937_64 proj_rng(config.seed ^ 0xc2b2ae3d27d4eb4fULL);
  const ChProjections teacher_ch(data::kStepCount, teacher.config().hidden, config.proj_dim, proj_rng);

  AdamW teacher_opt(teacher.parameters(), {config.teacher_lr, 0.9, 0.999, 1e-8, config.weight_decay});
  AdamW student_opt(student.parameters(), {config.student_lr, 0.9, 0.999, 1e-8, config.weight_decay});

  auto notify = [&](std::size_t e, std::size_t b, TrainStage st) {
    if (hooks.on_stage) hooks.on_stage(e, b, st);
  };

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.pretrain = epoch <= config.pretrain_epochs;
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t batches = 0;

    for (std::size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      const std::span<const std::size_t> rows(order.data() + start,
                                              std::min(config.batch_size, order.size() - start));
      const Tensor x = rows_of(train_set.features, rows);
      std::vector<std::vector<int>> labels(data::kStepCount);
      for (std::size_t s = 0; s < data::kStepCount; ++s) labels[s] = step_labels(train_set, s, rows);

      try {
        notify(epoch, b, TrainStage::BeforeTeacherUpdate);
        {
          teacher_opt.zero_grad();
          const TeacherOutput out = teacher.forward(x, true);
          Tensor loss = ops::cross_entropy_masked(out.logits[0], labels[0], data::kMissingLabel);
          for (std::size_t s = 1; s < data::kStepCount; ++s)
            loss = ops::add(loss, ops::cross_entropy_masked(out.logits[s], labels[s], data::kMissingLabel));
          require_finite(loss.item(), epoch, b, "teacher loss");
          loss.backward();
          teacher_opt.step();
          log.teacher_batch_losses.push_back(loss.item());
          log.teacher_ce += loss.item();
        }
        notify(epoch, b, TrainStage::AfterTeacherUpdate);

        if (!log.pretrain) {
          std::vector<Tensor> t_logits, u;
          {
            NoGradGuard guard;
            const TeacherOutput out = teacher.forward(x, false);
            for (std::size_t s = 0; s < data::kStepCount; ++s) {
              t_logits.push_back(out.logits[s].detach());
              u.push_back(teacher_ch.project(s, out.image_features).detach());
            }
          }
          notify(epoch, b, TrainStage::BeforeStudentUpdate);
          student_opt.zero_grad();
          const StudentOutput out = student.forward(x, true);
          Tensor total;
          double ce = 0.0, kd = 0.0, ch = 0.0;
          for (std::size_t s = 0; s < data::kStepCount; ++s) {
            StepLoss l = student_step_loss(t_logits[s], out.logits[s], labels[s], u[s], out.ch_features[s], config);
            total = s == 0 ? l.total : ops::add(total, l.total);
            ce += l.ce;
            kd += l.kd;
            ch += l.ch;
          }
          require_finite(total.item(), epoch, b, "student loss");
          total.backward();
          student_opt.step();
          log.student_total += total.item();
          log.student_ce += ce;
          log.student_kd += kd;
          log.student_ch += ch;
          notify(epoch, b, TrainStage::AfterStudentUpdate);
        }
      } catch (const std::domain_error& e) {
        // Non-finite values inside an op or optimizer step.
        throw TrainingDiverged(epoch, b,
                               std::string("train: diverged at epoch ") + std::to_string(epoch) +
                                   ", batch " + std::to_string(b) + ": " + e.what());
      }
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    log.teacher_ce *= inv;
    log.student_total *= inv;
    log.student_ce *= inv;
    log.student_kd *= inv;
    log.student_ch *= inv;

    log.teacher_val = evaluate_teacher(teacher, val_set);
    log.student_val = evaluate_student(student, val_set);
    const double t_acc = log.teacher_val.mean_accuracy();
    const double s_acc = log.student_val.mean_accuracy();
    if (t_acc > result.best_teacher_accuracy) {
      result.best_teacher_accuracy = t_acc;
      result.best_teacher_epoch = epoch;
      result.best_teacher_checkpoint = checkpoint_to_json(teacher.parameters());
    }
    if (s_acc > result.best_student_accuracy) {
      result.best_student_accuracy = s_acc;
      result.best_student_epoch = epoch;
      result.best_student_checkpoint = checkpoint_to_json(student.parameters());
    }
    if (hooks.metrics_log) *hooks.metrics_log << epoch_log_json(log) << '\n' << std::flush;
    result.epochs.push_back(std::move(log));
  }
  return result;
}

}  // namespace stepcot
