// SPDX-License-Identifier: Apache-2.0
#include "stepcot/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "stepcot/data/labels.hpp"
#include "stepcot/data/split.hpp"
#include "stepcot/data/stats.hpp"
#include "stepcot/data/synthetic.hpp"
#include "stepcot/distill/trainer.hpp"
#include "stepcot/gradcheck_suite.hpp"
#include "stepcot/numerics/checkpoint.hpp"
#include "stepcot/numerics/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace stepcot::cli {

namespace {

class DomainFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("STEPCHAIN_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError("STEPCHAIN_SEED", std::string("not an integer: '") + env + "'");
  }
  return 0;
}

std::string kebab(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  data::write_text_file(path, text);
}

data::ValidationResult load_records(const std::string& path) {
  return data::parse_and_validate(data::read_text_file(path));
}

ordered_json violations_json(const data::ValidationResult& r) {
  ordered_json list = ordered_json::array();
  for (const auto& v : r.violations)
    list.push_back({{"record_id", v.record_id}, {"step", v.step}, {"rule", v.rule}, {"detail", v.detail}});
  ordered_json j;
  j["total_records"] = r.total_records;
  j["valid_records"] = r.records.size();
  j["violation_count"] = r.violations.size();
  j["violations"] = std::move(list);
  return j;
}

std::vector<data::ChainRecord> select(const std::vector<data::ChainRecord>& records,
                                      const std::vector<std::string>& ids) {
  std::map<std::string, const data::ChainRecord*> by_id;
  for (const auto& r : records) by_id[r.patient_id] = &r;
  std::vector<data::ChainRecord> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DomainFailure("split lists unknown patient_id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// validate ------------------------------------------------------------------

struct ValidateArgs {
  std::string data, out;
};

int cmd_validate(const ValidateArgs& a, Context& c) {
  const auto result = load_records(a.data);
  write_output(a.out, violations_json(result).dump(2) + "\n");
  std::map<std::string, std::size_t> per_rule;
  for (const auto& v : result.violations) ++per_rule[v.rule];
  c.out << result.total_records << " records, " << result.violations.size() << " violations\n";
  for (const auto& [rule, n] : per_rule) c.out << "  " << rule << ": " << n << "\n";
  for (const auto& v : result.violations) {
    c.out << "  " << v.record_id;
    if (v.step > 0) c.out << " step " << v.step;
    c.out << " [" << v.rule << "] " << v.detail << "\n";
  }
  return result.violations.empty() ? kExitOk : kExitFailure;
}

// split ---------------------------------------------------------------------

struct SplitArgs {
  std::string data, out_dir, out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> counts;
  double train = 0.70, val = 0.15, test = 0.15;
};

int cmd_split(const SplitArgs& a, Context& c) {
  const data::SplitRatios ratios{a.train, a.val, a.test};
  if (std::abs(a.train + a.val + a.test - 1.0) > 1e-9 || a.train < 0 || a.val < 0 || a.test < 0)
    throw CLI::ValidationError("--train/--val/--test", "ratios must be nonnegative and sum to 1");
  ordered_json rows = ordered_json::array();
  data::SplitCounts total;
  auto emit = [&](const std::string& name, std::size_t n, const data::SplitCounts& k) {
    rows.push_back({{"class", name}, {"total", n}, {"train", k.train}, {"val", k.val}, {"test", k.test}});
    total.train += k.train;
    total.val += k.val;
    total.test += k.test;
    c.out << name << " " << n << " -> " << k.train << "/" << k.val << "/" << k.test << "\n";
  };

  if (!a.counts.empty()) {
    for (const auto& spec : a.counts) {
      const auto eq = spec.rfind('=');
      if (eq == std::string::npos)
        throw CLI::ValidationError("--counts", "expected NAME=COUNT, got '" + spec + "'");
      std::size_t n = 0;
      try {
        std::size_t used = 0;
        n = std::stoull(spec.substr(eq + 1), &used);
        if (used != spec.size() - eq - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw CLI::ValidationError("--counts", "bad count in '" + spec + "'");
      }
      emit(spec.substr(0, eq), n, data::split_counts(n, ratios));
    }
  } else {
    if (a.data.empty()) throw CLI::RequiredError("--data or --counts");
    const auto result = load_records(a.data);
    if (!result.violations.empty())
      c.err << "warning: " << result.violations.size() << " violations; splitting "
            << result.records.size() << " valid records\n";
    if (result.records.empty()) throw DomainFailure("no valid records to split");
    const auto manifest = data::stratified_split(
        result.records, [](const data::ChainRecord& r) { return data::diagnosis_class(r); }, ratios,
        resolve_seed(a.seed));
    const auto& step7 = data::StepSchema::standard().step(data::kStepCount - 1);
    for (const auto& [cls, k] : manifest.per_class) {
      const auto name = data::decode_label(step7, cls).value_or("No Answer");
      emit(name, k.train + k.val + k.test, k);
    }
    if (!a.out_dir.empty()) data::write_split_files(manifest, a.out_dir);
  }
  c.out << "Subtotal " << total.train + total.val + total.test << " -> " << total.train << "/"
        << total.val << "/" << total.test << "\n";
  ordered_json j;
  j["classes"] = std::move(rows);
  j["subtotal"] = {{"train", total.train}, {"val", total.val}, {"test", total.test}};
  write_output(a.out, j.dump(2) + "\n");
  return kExitOk;
}

// stats ---------------------------------------------------------------------

struct StatsArgs {
  std::string data, out;
};

int cmd_stats(const StatsArgs& a, Context& c) {
  const auto result = load_records(a.data);
  if (!result.violations.empty())
    c.err << "warning: " << result.violations.size() << " violations; statistics cover "
          << result.records.size() << " valid records\n";
  const std::string json = data::stats_to_json(data::compute_stats(result.records));
  if (a.out.empty())
    c.out << json << "\n";
  else
    write_output(a.out, json + "\n");
  return kExitOk;
}

// synth ---------------------------------------------------------------------

struct SynthArgs {
  std::size_t n = 1000, dim = 64;
  double noise = 0.1;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".", features_format = "json";
};

int cmd_synth(const SynthArgs& a, Context& c) {
  data::SyntheticOptions opts;
  opts.n = a.n;
  opts.feature_dim = a.dim;
  opts.noise = a.noise;
  opts.seed = resolve_seed(a.seed);
  const auto ds = data::generate_synthetic(opts);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  data::write_text_file((dir / "data.json").string(), data::serialize_records(ds.records));
  const fs::path features = dir / ("features." + a.features_format);
  ds.features.save(features);
  c.out << "wrote " << ds.records.size() << " records to " << (dir / "data.json").string() << " and "
        << features.string() << "\n";
  return kExitOk;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::map<std::string, std::string> overrides;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, Context& c) {
  // Precedence: flags, then the config file, then $STEPCHAIN_SEED for the seed.
  DistillConfig cfg;
  cfg.seed = resolve_seed(std::nullopt);
  if (!a.config.empty()) cfg = load_config(a.config, cfg);
  for (const auto& [k, v] : a.overrides) set_config_value(cfg, k, v);
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  if (cfg.data.empty() || cfg.features.empty())
    throw CLI::ValidationError("train", "data and features must be set in the config or by flag");

  const auto result = load_records(cfg.data);
  if (!result.violations.empty())
    c.err << "warning: skipping " << result.violations.size() << " records with violations\n";
  const auto table = data::FeatureTable::load(cfg.features);

  std::vector<data::ChainRecord> train_records, val_records;
  if (!cfg.split_dir.empty()) {
    train_records = select(result.records, data::read_id_list(fs::path(cfg.split_dir) / "train.csv"));
    val_records = select(result.records, data::read_id_list(fs::path(cfg.split_dir) / "val.csv"));
  } else {
    const auto m = data::stratified_split(
        result.records, [](const data::ChainRecord& r) { return data::diagnosis_class(r); }, {}, cfg.seed);
    train_records = select(result.records, m.train);
    val_records = select(result.records, m.val);
  }
  if (train_records.empty() || val_records.empty()) throw DomainFailure("empty train or validation split");

  const auto train_set = assemble_examples(train_records, table);
  const auto val_set = assemble_examples(val_records, table);

  TeacherConfig tc;
  tc.raw_dim = table.dim();
  tc.hidden = cfg.teacher_hidden;
  tc.heads = cfg.heads;
  tc.layers = cfg.gat_layers;
  tc.dropout = cfg.dropout;
  tc.seed = cfg.seed;
  StudentConfig sc;
  sc.raw_dim = table.dim();
  sc.hidden = cfg.student_hidden;
  sc.proj_dim = cfg.proj_dim;
  sc.seed = cfg.seed + 1;
  TeacherModel teacher(tc);
  StudentModel student(sc);

  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  std::ofstream log(dir / "metrics.ndjson", std::ios::binary);
  if (!log) throw DomainFailure("cannot write " + (dir / "metrics.ndjson").string());
  TrainHooks hooks;
  hooks.metrics_log = &log;
  const auto started = std::chrono::steady_clock::now();
  std::size_t epoch_seen = 0;
  hooks.on_stage = [&](std::size_t epoch, std::size_t, TrainStage) {
    if (epoch != epoch_seen) {
      epoch_seen = epoch;
      c.err << "epoch " << epoch << "/" << cfg.epochs << "\n";
    }
  };
  const auto r = train(train_set, val_set, teacher, student, cfg, hooks);
  data::write_text_file((dir / "teacher_best.json").string(), r.best_teacher_checkpoint);
  data::write_text_file((dir / "student_best.json").string(), r.best_student_checkpoint);
  std::ostringstream resolved;
  for (const auto& [k, v] : config_to_map(cfg)) resolved << k << " = " << v << "\n";
  data::write_text_file((dir / "config.resolved").string(), resolved.str());

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  c.out << "teacher best mean accuracy " << r.best_teacher_accuracy << " (epoch " << r.best_teacher_epoch
        << ")\nstudent best mean accuracy " << r.best_student_accuracy << " (epoch "
        << r.best_student_epoch << ")\ntrained " << cfg.epochs << " epochs in " << secs << " s, outputs in "
        << dir.string() << "\n";
  return kExitOk;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string data, features, ids, out;
};

int cmd_eval(const EvalArgs& a, Context& c) {
  const auto result = load_records(a.data);
  if (!result.violations.empty())
    c.err << "warning: skipping " << result.violations.size() << " records with violations\n";
  std::vector<data::ChainRecord> records =
      a.ids.empty() ? result.records : select(result.records, data::read_id_list(a.ids));
  if (records.empty()) throw DomainFailure("no records to evaluate");
  const auto table = data::FeatureTable::load(a.features);
  const auto examples = assemble_examples(records, table);

  ordered_json reports;
  for (const auto& path : a.checkpoints) {
    const auto values = read_checkpoint(path);
    bool has_teacher = false, has_student = false;
    for (const auto& [name, t] : values) {
      has_teacher |= name.rfind("teacher/", 0) == 0;
      has_student |= name.rfind("student/", 0) == 0;
    }
    if (has_teacher == has_student)
      throw DomainFailure(path + ": expected either teacher/ or student/ parameters");
    metrics::StepReport report;
    std::string kind;
    if (has_teacher) {
      TeacherModel model(infer_teacher_config(values));
      auto params = model.parameters();
      load_checkpoint(params, values);
      if (model.config().raw_dim != table.dim()) throw DomainFailure("feature width does not match checkpoint");
      report = evaluate_teacher(model, examples);
      kind = "teacher";
    } else {
      StudentModel model(infer_student_config(values));
      auto params = model.parameters();
      load_checkpoint(params, values);
      if (model.config().raw_dim != table.dim()) throw DomainFailure("feature width does not match checkpoint");
      report = evaluate_student(model, examples);
      kind = "student";
    }
    c.out << kind << " (" << path << ")\n" << metrics::report_to_table(report) << "\n";
    reports[path] = {{"model", kind}, {"report", ordered_json::parse(metrics::report_to_json(report, -1))}};
  }
  write_output(a.out, reports.dump(2) + "\n");
  return kExitOk;
}

// gradcheck -----------------------------------------------------------------

struct GradcheckArgs {
  std::optional<std::uint64_t> seed;
  double step = 1e-5, tolerance = 1e-4;
  std::string out;
};

int cmd_gradcheck(const GradcheckArgs& a, Context& c) {
  GradCheckSuiteOptions opts;
  opts.seed = resolve_seed(a.seed);
  opts.step = a.step;
  opts.tolerance = a.tolerance;
  const auto started = std::chrono::steady_clock::now();
  const auto entries = run_gradcheck_suite(opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  ordered_json list = ordered_json::array();
  bool ok = true;
  for (const auto& e : entries) {
    char line[160];
    std::snprintf(line, sizeof line, "%-24s %.3e  %s", e.name.c_str(), e.max_rel_error,
                  e.passed ? "ok" : "FAIL");
    c.out << line;
    if (!e.passed) c.out << " (worst: " << e.worst << ")";
    c.out << "\n";
    ok &= e.passed;
    list.push_back({{"name", e.name}, {"max_rel_error", e.max_rel_error}, {"worst", e.worst}, {"passed", e.passed}});
  }
  c.out << entries.size() << " checks, " << (ok ? "all passed" : "FAILURES") << ", kernels "
        << kernels::backend_name(kernels::active_backend()) << ", " << secs << " s\n";
  ordered_json j;
  j["tolerance"] = a.tolerance;
  j["step"] = a.step;
  j["checks"] = std::move(list);
  write_output(a.out, j.dump(2) + "\n");
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Step-wise chain-of-thought teacher/student toolkit", "stepcot"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stepcot 0.1.0");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check chain records against the step template");
  validate->add_option("--data", va.data, "Chain records (JSON)")->required();
  validate->add_option("--out", va.out, "Write the violation report as JSON");

  SplitArgs sa;
  auto* split = app.add_subcommand("split", "Stratified train/val/test split by diagnosis");
  split->add_option("--data", sa.data, "Chain records (JSON)");
  split->add_option("--counts", sa.counts, "Per-class totals NAME=COUNT (no data needed)");
  split->add_option("--seed", sa.seed, "Shuffle seed (default $STEPCHAIN_SEED, else 0)");
  split->add_option("--out-dir", sa.out_dir, "Directory for train.csv, val.csv, test.csv");
  split->add_option("--out", sa.out, "Write the count table as JSON");
  split->add_option("--train", sa.train, "Train fraction")->capture_default_str();
  split->add_option("--val", sa.val, "Validation fraction")->capture_default_str();
  split->add_option("--test", sa.test, "Test fraction")->capture_default_str();

  StatsArgs sta;
  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  stats->add_option("--data", sta.data, "Chain records (JSON)")->required();
  stats->add_option("--out", sta.out, "Write JSON here instead of stdout");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset and feature table");
  synth->add_option("--n", sy.n, "Number of records")->capture_default_str();
  synth->add_option("--dim", sy.dim, "Feature dimension")->capture_default_str();
  synth->add_option("--noise", sy.noise, "Gaussian noise scale")->capture_default_str();
  synth->add_option("--seed", sy.seed, "Seed (default $STEPCHAIN_SEED, else 0)");
  synth->add_option("--out-dir", sy.out_dir, "Output directory")->capture_default_str();
  synth->add_option("--features-format", sy.features_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  TrainArgs ta;
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_opts;
  auto* train_cmd = app.add_subcommand("train", "Train teacher and student");
  train_cmd->add_option("--config", ta.config, "key = value config file");
  for (const auto& key : config_keys()) {
    if (key == "seed") continue;
    flag_opts[key] = train_cmd->add_option("--" + kebab(key), flag_values[key], "Overrides " + key);
  }
  train_cmd->add_option("--seed", ta.seed, "Overrides seed (default $STEPCHAIN_SEED, else 0)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Per-step metrics for saved checkpoints");
  eval->add_option("--checkpoint", ea.checkpoints, "Teacher or student checkpoint (repeatable)")->required();
  eval->add_option("--data", ea.data, "Chain records (JSON)")->required();
  eval->add_option("--features", ea.features, "Feature table (.json or .csv)")->required();
  eval->add_option("--ids", ea.ids, "Restrict to the patient ids listed in this file");
  eval->add_option("--out", ea.out, "Write reports as JSON");

  GradcheckArgs ga;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--seed", ga.seed, "Seed (default $STEPCHAIN_SEED, else 0)");
  gradcheck->add_option("--step", ga.step, "Finite-difference step in [1e-7, 1e-4]")->capture_default_str();
  gradcheck->add_option("--tolerance", ga.tolerance, "Maximum relative error")->capture_default_str();
  gradcheck->add_option("--out", ga.out, "Write results as JSON");

  Context ctx{out, err};
  try {
    app.parse(argc, argv);
    for (const auto& [key, opt] : flag_opts)
      if (opt->count() > 0) ta.overrides[key] = flag_values[key];
    if (*validate) return cmd_validate(va, ctx);
    if (*split) return cmd_split(sa, ctx);
    if (*stats) return cmd_stats(sta, ctx);
    if (*synth) return cmd_synth(sy, ctx);
    if (*train_cmd) return cmd_train(ta, ctx);
    if (*eval) return cmd_eval(ea, ctx);
    if (*gradcheck) return cmd_gradcheck(ga, ctx);
    return kExitUsage;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "stepcot 0.1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "stepcot: " << e.what() << "\n";
    return kExitUsage;
  } catch (const data::JsonParseError& e) {
    err << "stepcot: " << e.what() << " (byte " << e.byte_offset() << ")\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "stepcot: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace stepcot::cli
