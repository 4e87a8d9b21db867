// SPDX-License-Identifier: Apache-2.0
#include "stepcot/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace stepcot::metrics {

namespace {

void check_inputs(const Tensor& p, std::span<const int> labels) {
  if (p.dim() != 2) throw std::invalid_argument("metrics: expected [rows x classes] scores");
  if (p.size(0) != labels.size())
    throw std::invalid_argument("metrics: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(p.size(0)) + " rows");
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::vector<std::size_t> confusion_matrix(std::span<const int> predicted, std::span<const int> labels,
                                          std::size_t classes, int sentinel) {
  if (predicted.size() != labels.size())
    throw std::invalid_argument("confusion_matrix: size mismatch");
  std::vector<std::size_t> counts(classes * classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == sentinel) continue;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes || predicted[i] < 0 ||
        static_cast<std::size_t>(predicted[i]) >= classes)
      throw std::out_of_range("confusion_matrix: class index out of range");
    ++counts[static_cast<std::size_t>(labels[i]) * classes + static_cast<std::size_t>(predicted[i])];
  }
  return counts;
}

std::vector<int> argmax_rows(const Tensor& scores) {
  const std::size_t rows = scores.size(0), cols = scores.size(1);
  auto d = scores.data();
  std::vector<int> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto* r = d.data() + i * cols;
    out[i] = static_cast<int>(std::max_element(r, r + cols) - r);
  }
  return out;
}

AucResult macro_auc(const Tensor& probabilities, std::span<const int> labels, int sentinel) {
  check_inputs(probabilities, labels);
  const std::size_t classes = probabilities.size(1);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != sentinel) rows.push_back(i);
  auto d = probabilities.data();

  std::vector<std::size_t> order(rows.size());
  std::vector<double> ranks(rows.size());
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += labels[r] == static_cast<int>(c);
    const std::size_t neg = rows.size() - pos;
    if (pos == 0 || neg == 0) continue;

    auto score = [&](std::size_t k) { return d[rows[k] * classes + c]; };
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) < score(b); });
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && score(order[j + 1]) == score(order[i])) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
      i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k)
      if (labels[rows[k]] == static_cast<int>(c)) rank_sum += ranks[k];
    const double p = static_cast<double>(pos), n = static_cast<double>(neg);
    total += (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
    ++used;
  }
  if (used == 0) return {};
  return {total / static_cast<double>(used), true};
}

StepMetrics per_step_metrics(const Tensor& probabilities, std::span<const int> labels, int sentinel) {
  check_inputs(probabilities, labels);
  const std::size_t classes = probabilities.size(1);
  auto d = probabilities.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == sentinel) continue;
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += d[i * classes + c];
    if (std::abs(s - 1.0) > 1e-6)
      throw std::invalid_argument("per_step_metrics: row " + std::to_string(i) + " sums to " +
                                  std::to_string(s));
  }
  const auto predicted = argmax_rows(probabilities);
  const auto cm = confusion_matrix(predicted, labels, classes, sentinel);

  StepMetrics m;
  std::size_t correct = 0;
  for (std::size_t c = 0; c < classes; ++c) correct += cm[c * classes + c];
  m.count = std::accumulate(cm.begin(), cm.end(), std::size_t{0});
  if (m.count == 0) return m;
  const double total = static_cast<double>(m.count);
  m.accuracy = 100.0 * static_cast<double>(correct) / total;

  std::size_t present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    double tp = static_cast<double>(cm[c * classes + c]), fn = 0.0, fp = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      if (k == c) continue;
      fn += static_cast<double>(cm[c * classes + k]);
      fp += static_cast<double>(cm[k * classes + c]);
    }
    if (tp + fn == 0.0) continue;
    ++present;
    const double tn = total - tp - fn - fp;
    const double sens = safe_ratio(tp, tp + fn);
    const double prec = safe_ratio(tp, tp + fp);
    m.sensitivity += sens;
    m.specificity += safe_ratio(tn, tn + fp);
    m.precision += prec;
    m.f1 += safe_ratio(2.0 * prec * sens, prec + sens);
  }
  const double scale = 100.0 / static_cast<double>(present);
  m.sensitivity *= scale;
  m.specificity *= scale;
  m.precision *= scale;
  m.f1 *= scale;

  const auto auc = macro_auc(probabilities, labels, sentinel);
  m.auc_defined = auc.defined;
  m.auc = auc.defined ? 100.0 * auc.value : 0.0;
  return m;
}

double StepReport::mean_accuracy() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : steps)
    if (s.count > 0) {
      sum += s.accuracy;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::string report_to_json(const StepReport& report, int indent) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto& s = report.steps[i];
    nlohmann::ordered_json row;
    row["step"] = i < report.step_names.size() ? report.step_names[i] : std::to_string(i + 1);
    row["count"] = s.count;
    row["accuracy"] = s.accuracy;
    row["auc"] = s.auc_defined ? nlohmann::ordered_json(s.auc) : nlohmann::ordered_json(nullptr);
    row["sensitivity"] = s.sensitivity;
    row["specificity"] = s.specificity;
    row["f1"] = s.f1;
    row["precision"] = s.precision;
    steps.push_back(std::move(row));
  }
  nlohmann::ordered_json out;
  out["steps"] = std::move(steps);
  out["mean_accuracy"] = report.mean_accuracy();
  return out.dump(indent);
}

std::string report_to_table(const StepReport& report) {
  std::size_t width = 4;
  for (const auto& n : report.step_names) width = std::max(width, n.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %6s %8s %6s %11s %11s %8s %9s\n", static_cast<int>(width),
                "Step", "N", "Accuracy", "AUC", "Sensitivity", "Specificity", "F1-Score", "Precision");
  out += buf;
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto& s = report.steps[i];
    const std::string name = i < report.step_names.size() ? report.step_names[i] : std::to_string(i + 1);
    char auc[16];
    if (s.auc_defined)
      std::snprintf(auc, sizeof auc, "%6.1f", s.auc);
    else
      std::snprintf(auc, sizeof auc, "%6s", "-");
    std::snprintf(buf, sizeof buf, "%-*s %6zu %8.1f %s %11.1f %11.1f %8.1f %9.1f\n",
                  static_cast<int>(width), name.c_str(), s.count, s.accuracy, auc, s.sensitivity,
                  s.specificity, s.f1, s.precision);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "mean accuracy %.2f\n", report.mean_accuracy());
  out += buf;
  return out;
}

}  // namespace stepcot::metrics
