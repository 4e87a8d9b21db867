// SPDX-License-Identifier: Apache-2.0
#include "stepcot/gradcheck_suite.hpp"

#include <cstdio>
#include <functional>
#include <random>

#include "stepcot/distill/losses.hpp"
#include "stepcot/gat.hpp"
#include "stepcot/numerics/gradcheck.hpp"
#include "stepcot/numerics/gru.hpp"
#include "stepcot/numerics/ops.hpp"
#include "stepcot/student.hpp"
#include "stepcot/teacher.hpp"

namespace stepcot {

namespace {

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

// Reduces an op output to a scalar with fixed random weights so that every
// output coordinate contributes a distinct gradient.
Tensor weighted_sum(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ops::sum(ops::mul(y, random_tensor(y.shape(), rng)));
}

std::string describe(const std::string& where, const GradCheckResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%zu] analytic %.6e numeric %.6e", r.worst_index, r.analytic, r.numeric);
  return where + buf;
}

class Suite {
 public:
  explicit Suite(const GradCheckSuiteOptions& o) : opts_(o), rng_(o.seed) {}

  Tensor rand(Shape s, double lo = -1.0, double hi = 1.0) { return random_tensor(std::move(s), rng_, lo, hi); }

  // Checks `fn` with respect to each input in turn.
  void check(const std::string& name, std::vector<Tensor> inputs, const Fn& fn) {
    GradCheckEntry e{name, 0.0, "", true};
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      auto r = grad_check([&](const Tensor&) { return fn(inputs); }, inputs[i], opts_.step);
      if (i == 0 || r.max_rel_error > e.max_rel_error) {
        e.max_rel_error = r.max_rel_error;
        e.worst = describe("input " + std::to_string(i), r);
      }
    }
    finish(std::move(e));
  }

  void check_params(const std::string& name, const ParamList& params, const std::function<Tensor()>& fn) {
    GradCheckEntry e{name, 0.0, "", true};
    bool first = true;
    for (const auto& p : params) {
      auto r = grad_check([&](const Tensor&) { return fn(); }, p.tensor, opts_.step);
      if (first || r.max_rel_error > e.max_rel_error) {
        e.max_rel_error = r.max_rel_error;
        e.worst = describe(p.name, r);
      }
      first = false;
    }
    finish(std::move(e));
  }

  std::vector<GradCheckEntry> take() { return std::move(entries_); }
  const GradCheckSuiteOptions& options() const { return opts_; }

 private:
  void finish(GradCheckEntry e) {
    e.passed = e.max_rel_error <= opts_.tolerance;
    entries_.push_back(std::move(e));
  }

  GradCheckSuiteOptions opts_;
  std::mt19937_64 rng_;
  std::vector<GradCheckEntry> entries_;
};

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(const GradCheckSuiteOptions& options) {
  Suite s(options);
  const std::uint64_t w = options.seed + 17;

  s.check("matmul", {s.rand({3, 4}), s.rand({4, 5})},
          [&](const auto& in) { return weighted_sum(ops::matmul(in[0], in[1]), w); });
  s.check("add", {s.rand({3, 4}), s.rand({3, 4})},
          [&](const auto& in) { return weighted_sum(ops::add(in[0], in[1]), w); });
  s.check("add_broadcast", {s.rand({3, 4}), s.rand({4})},
          [&](const auto& in) { return weighted_sum(ops::add(in[0], in[1]), w); });
  s.check("sub", {s.rand({3, 4}), s.rand({3, 4})},
          [&](const auto& in) { return weighted_sum(ops::sub(in[0], in[1]), w); });
  s.check("mul", {s.rand({3, 4}), s.rand({3, 4})},
          [&](const auto& in) { return weighted_sum(ops::mul(in[0], in[1]), w); });
  s.check("scale", {s.rand({3, 4})}, [&](const auto& in) { return weighted_sum(ops::scale(in[0], -1.7), w); });
  s.check("concat_rows", {s.rand({2, 3}), s.rand({4, 3})},
          [&](const auto& in) { return weighted_sum(ops::concat({in[0], in[1]}, 0), w); });
  s.check("concat_cols", {s.rand({3, 2}), s.rand({3, 4})},
          [&](const auto& in) { return weighted_sum(ops::concat({in[0], in[1]}, 1), w); });
  s.check("linear", {s.rand({3, 4}), s.rand({5, 4}), s.rand({5})},
          [&](const auto& in) { return weighted_sum(ops::linear(in[0], in[1], in[2]), w); });
  s.check("leaky_relu", {s.rand({4, 5})},
          [&](const auto& in) { return weighted_sum(ops::leaky_relu(in[0]), w); });
  s.check("relu", {s.rand({4, 5})}, [&](const auto& in) { return weighted_sum(ops::relu(in[0]), w); });
  s.check("tanh", {s.rand({4, 5}, -2.0, 2.0)}, [&](const auto& in) { return weighted_sum(ops::tanh(in[0]), w); });
  s.check("sigmoid", {s.rand({4, 5}, -3.0, 3.0)},
          [&](const auto& in) { return weighted_sum(ops::sigmoid(in[0]), w); });
  s.check("layer_norm", {s.rand({3, 6}), s.rand({6}, 0.5, 1.5), s.rand({6})}, [&](const auto& in) {
    return weighted_sum(ops::layer_norm(in[0], in[1], in[2], ops::kLayerNormEps), w);
  });
  s.check("softmax", {s.rand({3, 5}, -2.0, 2.0)},
          [&](const auto& in) { return weighted_sum(ops::softmax(in[0], 1), w); });
  s.check("log_softmax", {s.rand({3, 5}, -2.0, 2.0)},
          [&](const auto& in) { return weighted_sum(ops::log_softmax(in[0], 1), w); });
  {
    const std::vector<std::uint8_t> keep = {1, 0, 1, 1, 0, 1, 1, 1, 0, 1, 1, 0};
    s.check("dropout_masked", {s.rand({3, 4})},
            [&, keep](const auto& in) { return weighted_sum(ops::dropout_masked(in[0], 0.25, keep), w); });
  }
  s.check("sum", {s.rand({3, 4})}, [](const auto& in) { return ops::sum(in[0]); });
  s.check("mean", {s.rand({3, 4})}, [&](const auto& in) { return ops::scale(ops::mean(in[0]), 3.0); });
  {
    const std::vector<std::size_t> rows = {2, 0, 2, 1};
    s.check("gather_rows", {s.rand({3, 4})},
            [&, rows](const auto& in) { return weighted_sum(ops::gather_rows(in[0], rows), w); });
  }
  s.check("reshape", {s.rand({3, 4})},
          [&](const auto& in) { return weighted_sum(ops::reshape(in[0], {2, 6}), w); });
  {
    const std::vector<int> labels = {2, -100, 0, 4};
    s.check("cross_entropy_masked", {s.rand({4, 5}, -2.0, 2.0)},
            [labels](const auto& in) { return ops::cross_entropy_masked(in[0], labels, -100); });
  }
  {
    std::mt19937_64 rng(options.seed + 3);
    GruCell gru(3, 4, rng);
    ParamList params;
    gru.collect(params, "gru");
    const Tensor x = s.rand({2, 3}), h = s.rand({2, 4});
    s.check("gru_inputs", {x, h}, [&](const auto& in) { return weighted_sum(gru.forward(in[0], in[1]), w); });
    s.check_params("gru_params", params, [&] { return weighted_sum(gru.forward(x, h), w); });
  }
  // Destination scores span a wider range than source scores so that most
  // rows mix both LeakyReLU branches; a row on one branch only is shift
  // invariant and contributes an exactly zero source-vector gradient.
  s.check("graph_attention", {s.rand({8, 6}), s.rand({2, 3}, -0.5, 0.5), s.rand({2, 3}, -3.0, 3.0)},
          [&](const auto& in) {
            return weighted_sum(graph_attention(in[0], in[1], in[2], 4, ops::kLeakySlope), w);
          });
  {
    const Tensor teacher_logits = s.rand({3, 5}, -2.0, 2.0);
    s.check("loss_kd", {s.rand({3, 5}, -2.0, 2.0)}, [teacher_logits](const auto& in) {
      const std::vector<int> labels = {1, -100, 0};
      return loss_kd(teacher_logits, in[0], 2.0, labels, -100);
    });
    const Tensor u = s.rand({4, 3}, -2.0, 2.0);
    s.check("ch_divergence", {s.rand({4, 3}, -2.0, 2.0)},
            [u](const auto& in) { return ch_divergence(u, in[0], 2.0); });
  }

  const std::size_t d = options.model_dim, batch = options.batch, raw = 8;
  {
    std::mt19937_64 rng(options.seed + 5);
    std::vector<int> labels;
    std::vector<std::vector<int>> per_step(data::kStepCount);
    TeacherConfig tc;
    tc.raw_dim = raw;
    tc.hidden = d;
    tc.seed = options.seed + 11;
    TeacherModel teacher(tc);
    const Tensor x = s.rand({batch, raw});
    for (std::size_t st = 0; st < data::kStepCount; ++st) {
      std::uniform_int_distribution<int> cls(0, static_cast<int>(tc.class_counts[st]) - 1);
      for (std::size_t b = 0; b < batch; ++b) per_step[st].push_back(cls(rng));
    }
    s.check_params("teacher_end_to_end", teacher.parameters(), [&] {
      const auto out = teacher.forward(x, false);
      Tensor loss = ops::cross_entropy_masked(out.logits[0], per_step[0], data::kMissingLabel);
      for (std::size_t st = 1; st < data::kStepCount; ++st)
        loss = ops::add(loss, ops::cross_entropy_masked(out.logits[st], per_step[st], data::kMissingLabel));
      return loss;
    });

    StudentConfig sc;
    sc.raw_dim = raw;
    sc.hidden = d;
    sc.proj_dim = 4;
    sc.seed = options.seed + 13;
    StudentModel student(sc);
    s.check_params("student_end_to_end", student.parameters(), [&] {
      const auto out = student.forward(x, false);
      Tensor loss = ops::cross_entropy_masked(out.logits[0], per_step[0], data::kMissingLabel);
      for (std::size_t st = 1; st < data::kStepCount; ++st)
        loss = ops::add(loss, ops::cross_entropy_masked(out.logits[st], per_step[st], data::kMissingLabel));
      return loss;
    });
  }
  return s.take();
}

}  // namespace stepcot
