// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles/classification.hpp"
#include "oracles/dense.hpp"
#include "oracles/gat.hpp"
#include "oracles/hsic.hpp"
#include "stepcot/data/labels.hpp"
#include "stepcot/data/record.hpp"
#include "stepcot/data/split.hpp"
#include "stepcot/data/synthetic.hpp"
#include "stepcot/distill/losses.hpp"
#include "stepcot/distill/trainer.hpp"
#include "stepcot/gradcheck_suite.hpp"
#include "stepcot/metrics/metrics.hpp"
#include "stepcot/numerics/checkpoint.hpp"
#include "stepcot/numerics/kernels.hpp"
#include "stepcot/numerics/ops.hpp"

using namespace stepcot;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradBudgetSeconds = 60.0;
constexpr double kIdentityTolerance = 1e-12;
constexpr double kWfwBound = 1.0 + 1e-6;
constexpr double kOracleTolerance = 1e-9;
constexpr double kTeacherTarget = 90.0;
constexpr double kStudentGap = 5.0;
constexpr double kLearnBudgetSeconds = 600.0;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

Tensor uniform(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

Tensor gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = n(rng);
  return Tensor({rows, cols}, std::move(v));
}

data::ChainRecord chain_record(int diagnosis, const std::string& id) {
  const auto& schema = data::StepSchema::standard();
  data::ChainRecord r;
  r.patient_id = id;
  r.image_path = id + ".png";
  r.origin = "synthetic";
  r.report = "synthetic";
  for (std::size_t s = 0; s < data::kStepCount; ++s) {
    const auto& t = schema.step(s);
    r.vqa_chain.push_back({t.step_name, t.question, t.options,
                           std::string(data::diagnosis_chains()[diagnosis][s]), ""});
  }
  return r;
}

// 2 ------------------------------------------------------------------------

Outcome gradient_oracle() {
  Outcome o;
  GradCheckSuiteOptions opts;
  opts.tolerance = kGradTolerance;
  opts.step = kGradStep;
  opts.model_dim = 16;
  opts.batch = 2;
  const auto t0 = std::chrono::steady_clock::now();
  const auto entries = run_gradcheck_suite(opts);
  const double secs = seconds_since(t0);
  double worst_op = 0.0;
  for (const auto& e : entries) {
    if (e.name.find("end_to_end") == std::string::npos) worst_op = std::max(worst_op, e.max_rel_error);
    o.require(e.passed, e.name + " rel err " + num(e.max_rel_error) + " at " + e.worst);
  }
  o.require(secs < kGradBudgetSeconds, "took " + num(secs) + " s");
  o.detail = std::to_string(entries.size()) + " checks, worst op " + num(worst_op) + ", " + num(secs) + " s" +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// 3 ------------------------------------------------------------------------

Outcome loss_identities() {
  Outcome o;
  std::mt19937_64 rng(3);

  double kd_max = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Tensor l = uniform({4, 7}, rng, -8, 8);
    kd_max = std::max(kd_max, std::abs(loss_kd(l, l, 2.0).item()));
  }
  o.require(kd_max == 0.0, "KD on identical logits " + num(kd_max));

  double ch_same = 0.0, ch_single = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Tensor u = uniform({6, 5}, rng, -3, 3);
    ch_same = std::max(ch_same, std::abs(loss_ch(u, u, 2.0, 1e-8).loss.item()));
    ch_single = std::max(ch_single, std::abs(loss_ch(uniform({1, 5}, rng, -3, 3), uniform({1, 5}, rng, -3, 3),
                                                     2.0, 1e-8).loss.item()));
  }
  o.require(ch_same == 0.0, "CH with U = V " + num(ch_same));
  o.require(ch_single == 0.0, "CH with n = 1 " + num(ch_single));

  std::uniform_int_distribution<std::size_t> size(2, 8);
  double wfw_max = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = size(rng), p = size(rng);
    wfw_max = std::max(wfw_max, std::abs(hsic_scalars(gaussian(n, p, rng), gaussian(n, p, rng), 2.0, 1e-8).w_fw));
  }
  o.require(wfw_max <= kWfwBound, "max |w_fw| " + num(wfw_max, 8));

  DistillConfig cfg;
  cfg.alpha_kd = 0.0;
  cfg.alpha_ch = 0.0;
  double ce_gap = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Tensor t = uniform({5, 6}, rng, -4, 4), s = uniform({5, 6}, rng, -4, 4);
    std::vector<int> labels = {0, 5, -100, 2, 3};
    std::shuffle(labels.begin(), labels.end(), rng);
    const double total =
        student_step_loss(t, s, labels, uniform({5, 4}, rng, -1, 1), uniform({5, 4}, rng, -1, 1), cfg).total.item();
    ce_gap = std::max(ce_gap, std::abs(total - ops::cross_entropy_masked(s, labels, data::kMissingLabel).item()));
  }
  o.require(ce_gap <= kIdentityTolerance, "alpha = 0 vs CE gap " + num(ce_gap));

  if (o.pass)
    o.detail = "KD 0, CH 0 (U = V and n = 1), max |w_fw| " + num(wfw_max, 4) + " over 1000 pairs, CE gap " +
               num(ce_gap);
  return o;
}

// 4 ------------------------------------------------------------------------

Outcome brute_force_equivalence() {
  Outcome o;
  std::mt19937_64 rng(4);
  double gat_err = 0.0, wb_err = 0.0, hsic_err = 0.0, auc_err = 0.0;

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t heads = 2, dim = 8, n = 2 + trial % 7;
    GatLayer layer(dim, heads, ops::kLeakySlope, rng);
    ParamList params;
    layer.collect(params, "g");
    std::map<std::string, Tensor> m;
    for (auto& p : params) {
      if (p.name.find("bias") != std::string::npos || p.name.find("norm") != std::string::npos)
        for (double& v : p.tensor.mutable_data()) v += std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
      m.emplace(p.name, p.tensor);
    }
    oracle::GatLayerWeights w;
    w.proj = oracle::to_mat(m.at("g/proj/weight").to_vector(), dim, dim);
    w.attn_src = oracle::to_mat(m.at("g/attn_src").to_vector(), heads, dim / heads);
    w.attn_dst = oracle::to_mat(m.at("g/attn_dst").to_vector(), heads, dim / heads);
    w.residual_w = oracle::to_mat(m.at("g/residual/weight").to_vector(), dim, dim);
    w.residual_b = m.at("g/residual/bias").to_vector();
    w.gamma = m.at("g/norm/gamma").to_vector();
    w.beta = m.at("g/norm/beta").to_vector();
    const Tensor x = uniform({n, dim}, rng, -2, 2);
    AttentionWeights attn;
    const Tensor out = layer.forward(x, n, &attn);
    const auto want = oracle::gat_layer(w, oracle::to_mat(x.to_vector(), n, dim), ops::kLeakySlope,
                                        ops::kLayerNormEps);
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          gat_err = std::max(gat_err, std::abs(attn[(h * n + i) * n + j] - want.alpha[h][i][j]));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < dim; ++k) gat_err = std::max(gat_err, std::abs(out.at(i, k) - want.out[i][k]));
  }

  for (int trial = 0; trial < 20; ++trial) {
    TeacherConfig tc;
    tc.raw_dim = 4;
    tc.hidden = 8;
    tc.seed = static_cast<std::uint64_t>(trial);
    TeacherModel model(tc);
    ParamList params;
    model.gru().collect(params, "gru");
    model.pred2mem().collect(params, "p2m");
    for (auto& p : params)
      if (p.name.find("bias") != std::string::npos)
        for (double& v : p.tensor.mutable_data()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    const std::size_t d = 8, c = 2 + trial % 7, batch = 3;
    const Tensor logits = uniform({batch, c}, rng, -3, 3), w_cls = uniform({c, d}, rng, -1, 1);
    const Tensor mem = uniform({batch, d}, rng, -1, 1);
    const Tensor out = model.memory_writeback(logits, w_cls, mem);
    const auto& g = model.gru();
    const oracle::GruWeights gw{oracle::to_mat(g.update_gate().weight().to_vector(), d, 2 * d),
                                oracle::to_mat(g.reset_gate().weight().to_vector(), d, 2 * d),
                                oracle::to_mat(g.candidate().weight().to_vector(), d, 2 * d),
                                g.update_gate().bias().to_vector(),
                                g.reset_gate().bias().to_vector(),
                                g.candidate().bias().to_vector()};
    const auto p2m = oracle::to_mat(model.pred2mem().weight().to_vector(), d, d);
    const auto p2m_b = model.pred2mem().bias().to_vector();
    const auto wm = oracle::to_mat(w_cls.to_vector(), c, d);
    for (std::size_t b = 0; b < batch; ++b) {
      oracle::Vec row(c), e(d, 0.0), h(d);
      for (std::size_t k = 0; k < c; ++k) row[k] = logits.at(b, k);
      const auto p = oracle::softmax(row);
      for (std::size_t k = 0; k < c; ++k)
        for (std::size_t j = 0; j < d; ++j) e[j] += p[k] * wm[k][j];
      for (std::size_t j = 0; j < d; ++j) h[j] = mem.at(b, j);
      const auto want = oracle::gru(gw, oracle::affine(p2m, p2m_b, e), h);
      for (std::size_t j = 0; j < d; ++j) wb_err = std::max(wb_err, std::abs(out.at(b, j) - want[j]));
    }
  }

  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 8, p = 2 + trial % 5;
    const Tensor u = uniform({n, p}, rng, -3, 3), v = uniform({n, p}, rng, -3, 3);
    const auto got = loss_ch(u, v, 2.0, 1e-8);
    const auto want = oracle::hsic(oracle::to_mat(u.to_vector(), n, p), oracle::to_mat(v.to_vector(), n, p), 2.0, 1e-8);
    for (double e : {got.hsic.h_uu - want.h_uu, got.hsic.h_vv - want.h_vv, got.hsic.h_uv - want.h_uv,
                     got.hsic.w_fw - want.w_fw, got.loss.item() - want.loss})
      hsic_err = std::max(hsic_err, std::abs(e));
  }

  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + trial % 5, c = 2 + trial % 3;
    Tensor s = uniform({n, c}, rng, 0, 1);
    if (trial % 2)
      for (double& v : s.mutable_data()) v = std::round(v * 3.0);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % c);
    std::shuffle(labels.begin(), labels.end(), rng);
    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) rows[i].push_back(s.at(i, k));
    const auto got = metrics::macro_auc(s, labels, data::kMissingLabel);
    auc_err = std::max(auc_err, std::abs(got.value - oracle::pairwise_macro_auc(rows, labels, static_cast<int>(c),
                                                                                data::kMissingLabel)));
  }

  o.require(gat_err <= kOracleTolerance, "GAT " + num(gat_err));
  o.require(wb_err <= kOracleTolerance, "write-back " + num(wb_err));
  o.require(hsic_err <= kOracleTolerance, "CH/HSIC " + num(hsic_err));
  o.require(auc_err <= kOracleTolerance, "macro AUC " + num(auc_err));
  if (o.pass)
    o.detail = "max abs err GAT " + num(gat_err) + ", write-back " + num(wb_err) + ", CH " + num(hsic_err) +
               ", AUC " + num(auc_err);
  return o;
}

// 5 ------------------------------------------------------------------------

Outcome split_reproduction() {
  Outcome o;
  std::vector<data::ChainRecord> records;
  for (int i = 0; i < 6787; ++i) records.push_back(chain_record(8, "n" + std::to_string(i)));
  for (int i = 0; i < 41; ++i) records.push_back(chain_record(7, "p" + std::to_string(i)));
  const auto m = data::stratified_split(
      records, [](const data::ChainRecord& r) { return data::diagnosis_class(r); }, {}, 0);
  const auto normal = m.per_class.at(8), pneumothorax = m.per_class.at(7);
  o.require(normal == data::SplitCounts{4750, 1018, 1019}, "Normal row");
  o.require(pneumothorax == data::SplitCounts{28, 6, 7}, "Pneumothorax row");
  o.require(m.train.size() + m.val.size() + m.test.size() == records.size(), "split not exhaustive");
  o.detail = "Normal " + std::to_string(normal.train) + "/" + std::to_string(normal.val) + "/" +
             std::to_string(normal.test) + ", Pneumothorax " + std::to_string(pneumothorax.train) + "/" +
             std::to_string(pneumothorax.val) + "/" + std::to_string(pneumothorax.test) +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// 6 ------------------------------------------------------------------------

Outcome schema_conformance() {
  Outcome o;
  const json sample = json::parse(data::read_text_file(STEPCOT_TEST_DATA_DIR "/sample_record.json"));
  const auto clean = data::parse_and_validate(sample.dump());
  o.require(clean.violations.empty() && clean.records.size() == 1, "sample record has violations");

  auto detects = [&](const std::string& rule, int step, const std::function<void(json&)>& mutate) {
    json r = sample;
    mutate(r);
    const auto res = data::parse_and_validate(json::array({r}).dump());
    const bool hit = std::any_of(res.violations.begin(), res.violations.end(),
                                 [&](const data::Violation& v) { return v.rule == rule && v.step == step; });
    o.require(hit, rule + " not detected");
  };
  detects("step_count", 0, [](json& r) { r["vqa_chain"].erase(6); });
  detects("template_drift", 2, [](json& r) { r["vqa_chain"][1]["question"] = "Where?"; });
  detects("template_drift", 5, [](json& r) { r["vqa_chain"][4]["options"][0] = "Smooth"; });
  detects("na_cascade", 3, [](json& r) { r["vqa_chain"][2]["answer"] = "Consolidation"; });
  detects("unknown_answer", 7, [](json& r) { r["vqa_chain"][6]["answer"] = "Fracture"; });
  if (o.pass) o.detail = "sample valid; step_count, template_drift, na_cascade, unknown_answer detected";
  return o;
}

// 7 ------------------------------------------------------------------------

Outcome learnability() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  data::SyntheticOptions so;
  so.n = 1000;
  so.noise = 0.1;
  so.seed = 7;
  so.feature_dim = 64;
  const auto ds = data::generate_synthetic(so);
  const auto m = data::stratified_split(
      ds.records, [](const data::ChainRecord& r) { return data::diagnosis_class(r); }, {}, 7);
  auto pick = [&](const std::vector<std::string>& ids) {
    std::map<std::string, const data::ChainRecord*> by_id;
    for (const auto& r : ds.records) by_id[r.patient_id] = &r;
    std::vector<data::ChainRecord> out;
    for (const auto& id : ids) out.push_back(*by_id.at(id));
    return assemble_examples(out, ds.features);
  };
  const auto train_set = pick(m.train), val_set = pick(m.val), test_set = pick(m.test);

  DistillConfig cfg;
  cfg.teacher_hidden = 128;
  cfg.student_hidden = 64;
  cfg.proj_dim = 32;
  cfg.batch_size = 32;
  cfg.teacher_lr = 1e-3;
  cfg.student_lr = 1e-3;
  cfg.epochs = 30;
  cfg.pretrain_epochs = 2;
  cfg.seed = 7;
  TeacherConfig tc;
  tc.raw_dim = so.feature_dim;
  tc.hidden = cfg.teacher_hidden;
  tc.seed = cfg.seed;
  StudentConfig sc;
  sc.raw_dim = so.feature_dim;
  sc.hidden = cfg.student_hidden;
  sc.proj_dim = cfg.proj_dim;
  sc.seed = cfg.seed + 1;
  TeacherModel teacher(tc);
  StudentModel student(sc);
  const auto result = train(train_set, val_set, teacher, student, cfg);

  TeacherModel best_teacher(tc);
  StudentModel best_student(sc);
  auto tp = best_teacher.parameters();
  auto sp = best_student.parameters();
  load_checkpoint(tp, parse_checkpoint(result.best_teacher_checkpoint));
  load_checkpoint(sp, parse_checkpoint(result.best_student_checkpoint));
  const auto t_report = evaluate_teacher(best_teacher, test_set);
  const auto s_report = evaluate_student(best_student, test_set);
  const double secs = seconds_since(t0);

  const double t_acc = t_report.mean_accuracy(), s_acc = s_report.mean_accuracy();
  o.require(t_acc >= kTeacherTarget, "teacher test accuracy " + num(t_acc, 4));
  o.require(s_acc >= t_acc - kStudentGap, "student " + num(s_acc, 4) + " vs teacher " + num(t_acc, 4));
  const auto counts = data::StepSchema::standard().class_counts();
  for (std::size_t s = 0; s < data::kStepCount; ++s) {
    const double chance = 100.0 / static_cast<double>(counts[s]);
    o.require(t_report.steps[s].accuracy > chance, "teacher step " + std::to_string(s + 1) + " at chance");
    o.require(s_report.steps[s].accuracy > chance, "student step " + std::to_string(s + 1) + " at chance");
  }
  o.require(secs < kLearnBudgetSeconds, "took " + num(secs) + " s");
  o.detail = "test mean acc teacher " + num(t_acc, 4) + " (val best " + num(result.best_teacher_accuracy, 4) +
             " @" + std::to_string(result.best_teacher_epoch) + "), student " + num(s_acc, 4) + " (val best " +
             num(result.best_student_accuracy, 4) + " @" + std::to_string(result.best_student_epoch) + "), " +
             num(secs) + " s" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// 8 ------------------------------------------------------------------------

Outcome determinism_and_detachment() {
  Outcome o;
  data::SyntheticOptions so;
  so.n = 120;
  so.feature_dim = 16;
  so.seed = 8;
  const auto ds = data::generate_synthetic(so);
  const auto train_set = assemble_examples(std::span(ds.records).first(90), ds.features);
  const auto val_set = assemble_examples(std::span(ds.records).subspan(90), ds.features);
  DistillConfig cfg;
  cfg.teacher_hidden = 16;
  cfg.student_hidden = 16;
  cfg.proj_dim = 8;
  cfg.batch_size = 16;
  cfg.epochs = 4;
  cfg.pretrain_epochs = 2;
  cfg.teacher_lr = 1e-3;
  cfg.student_lr = 1e-3;
  cfg.seed = 11;
  TeacherConfig tc;
  tc.raw_dim = 16;
  tc.hidden = 16;
  tc.seed = 1;
  StudentConfig sc;
  sc.raw_dim = 16;
  sc.hidden = 16;
  sc.proj_dim = 8;
  sc.seed = 2;

  auto values = [](const ParamList& ps) {
    std::vector<std::vector<double>> out;
    for (const auto& p : ps) out.push_back(p.tensor.to_vector());
    return out;
  };

  std::size_t student_updates = 0, teacher_changed = 0, pretrain_student_changed = 0;
  TeacherModel t1(tc);
  StudentModel s1(sc);
  const auto student_init = values(s1.parameters());
  std::vector<std::vector<double>> held;
  TrainHooks hooks;
  hooks.on_stage = [&](std::size_t epoch, std::size_t, TrainStage st) {
    if (epoch <= cfg.pretrain_epochs && st == TrainStage::AfterTeacherUpdate)
      pretrain_student_changed += values(s1.parameters()) != student_init;
    if (st == TrainStage::BeforeStudentUpdate) held = values(t1.parameters());
    if (st == TrainStage::AfterStudentUpdate) {
      ++student_updates;
      teacher_changed += values(t1.parameters()) != held;
    }
  };
  const auto r1 = train(train_set, val_set, t1, s1, cfg, hooks);

  TeacherModel t2(tc);
  StudentModel s2(sc);
  const auto r2 = train(train_set, val_set, t2, s2, cfg);

  o.require(r1.best_teacher_checkpoint == r2.best_teacher_checkpoint, "best teacher checkpoints differ");
  o.require(r1.best_student_checkpoint == r2.best_student_checkpoint, "best student checkpoints differ");
  o.require(checkpoint_to_json(t1.parameters()) == checkpoint_to_json(t2.parameters()), "final teacher differs");
  o.require(checkpoint_to_json(s1.parameters()) == checkpoint_to_json(s2.parameters()), "final student differs");
  o.require(student_updates > 0, "no student updates observed");
  o.require(teacher_changed == 0, std::to_string(teacher_changed) + " student updates changed the teacher");
  o.require(pretrain_student_changed == 0, "student changed during pretraining");
  if (o.pass)
    o.detail = "checkpoints bit-identical; teacher unchanged across " + std::to_string(student_updates) +
               " student updates; student untouched in pretraining";
  return o;
}

}  // namespace

int main() {
  std::printf("kernels: %s\n", std::string(kernels::backend_name(kernels::active_backend())).c_str());
  std::fflush(stdout);
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  std::printf("[N/A ] 1 published-number reproduction: out of scope (needs real images and pretrained backbones)\n");
  report(2, "gradient oracle", gradient_oracle);
  report(3, "loss identities", loss_identities);
  report(4, "brute-force equivalence", brute_force_equivalence);
  report(5, "split reproduction", split_reproduction);
  report(6, "schema conformance", schema_conformance);
  report(7, "learnability", learnability);
  report(8, "determinism and detachment", determinism_and_detachment);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
