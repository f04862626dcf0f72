// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/cli/commands.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "slmrec/cli/pipeline.h"
#include "slmrec/cli/run_config.h"
#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"
#include "slmrec/common/random.h"
#include "slmrec/common/threads.h"
#include "slmrec/distill/distill.h"
#include "slmrec/eval/evaluate.h"
#include "slmrec/model/checkpoint.h"
#include "slmrec/model/pretrain.h"
#include "slmrec/prune/sweep.h"
#include "slmrec/theory/propagation.h"

namespace slmrec::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct CommonArgs {
  std::optional<fs::path> config_file;
  std::vector<std::string> overrides;
  std::string work_dir;
  std::string log_level = "info";

  RunConfig resolve(std::vector<std::string> extra = {}) const {
    std::vector<std::string> all = overrides;
    if (!work_dir.empty()) {
      all.push_back("work_dir=" + work_dir);
    }
    all.insert(all.end(), extra.begin(), extra.end());
    return load_config(config_file, all);
  }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_file, "key=value config file");
  cmd->add_option("--set", args.overrides, "override, key=value (repeatable)")
      ->allow_extra_args(false);
  cmd->add_option("--work-dir", args.work_dir, "output root (config key work_dir)");
  cmd->add_option("--log-level", args.log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));
}

data::SplitDataset load_split(const Layout& layout) {
  return data::read_split_manifest(layout.split_file());
}

model::DecoderWeights<float> load_model(const fs::path& path) {
  return model::weights_from_checkpoint(model::load_checkpoint(path));
}

Tensor<float> load_item_table(const Layout& layout) {
  return load_model(layout.embed_file()).id_embedding;
}

void write_metrics(const fs::path& dir, const std::string& name,
                   const eval::MetricsReport& report) {
  write_text_file(dir / name, report.to_json());
}

std::string step_log_csv(const std::vector<model::StepRecord>& steps) {
  std::string out = "step,loss,lr,grad_norm,seconds\n";
  for (const auto& s : steps) {
    out += fmt::format("{},{:.8g},{:.8g},{:.8g},{:.6f}\n", s.step, s.loss, s.learning_rate,
                       s.grad_norm, s.seconds);
  }
  return out;
}

std::string eval_log_csv(const std::vector<model::EvalRecord>& evals) {
  std::string out = "step,MRR\n";
  for (const auto& e : evals) {
    out += fmt::format("{},{:.8f}\n", e.step, e.metric);
  }
  return out;
}

// Test-stage evaluation of a finished model, timed.
eval::MetricsReport evaluate_test(const RunConfig& config, const data::SplitDataset& split,
                                  const model::DecoderWeights<float>& weights,
                                  double& seconds) {
  const auto start = Clock::now();
  eval::MetricsReport r = eval::evaluate_model(weights, split,
                                               config.eval_options(data::Stage::kTest));
  seconds = seconds_since(start);
  return r;
}

std::string opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.5f}", *v) : std::string("-");
}

// ---------------------------------------------------------------------------

int cmd_prepare_data(const RunConfig& config, const Clock::time_point start) {
  const Layout layout(config);
  const data::PreparedData prepared = prepare_data(config);
  fs::create_directories(layout.data_dir());
  data::write_split_manifest(prepared.split, prepared.stats, layout.split_file());
  data::write_index_map(prepared.split.maps.user_ids, 0, layout.data_dir() / "users.tsv");
  data::write_index_map(prepared.split.maps.item_ids, 1, layout.data_dir() / "items.tsv");
  write_text_file(layout.data_dir() / "config.txt", write_config_text(config));
  const std::string manifest_hash =
      fmt::format("{:016x}", fnv1a64(read_text_file(layout.split_file())));
  if (config.data_input.empty()) {
    fmt::print("synthetic {}\n", config.synthetic_spec().to_string());
  }
  fmt::print("|U|={} |V|={} |E|={} density={:.6f} manifest={}\n", prepared.stats.users,
             prepared.stats.items, prepared.stats.interactions, prepared.stats.density,
             manifest_hash);
  RunRecord rec;
  rec.command = "prepare-data";
  rec.config = config;
  rec.wall_seconds = seconds_since(start);
  rec.extra["users"] = prepared.stats.users;
  rec.extra["items"] = prepared.stats.items;
  rec.extra["interactions"] = prepared.stats.interactions;
  rec.extra["density"] = prepared.stats.density;
  rec.extra["filter_sweeps"] = prepared.filter_sweeps;
  rec.extra["manifest_hash"] = manifest_hash;
  write_run_json(rec, layout.data_dir());
  return kOk;
}

int cmd_pretrain_embed(const RunConfig& config, const Clock::time_point start) {
  const Layout layout(config);
  const data::SplitDataset split = load_split(layout);
  const auto train_start = Clock::now();
  const model::PretrainResult result =
      model::pretrain_id_embeddings(split, config.pretrain_options());
  const double train_seconds = seconds_since(train_start);
  model::save_checkpoint(model::to_checkpoint(result.model), layout.embed_file());
  RunRecord rec;
  rec.command = "pretrain-embed";
  rec.config = config;
  rec.layers = result.model.config.layers;
  rec.params = result.model.parameter_count(true);
  rec.total_params = result.model.parameter_count(false);
  rec.train_seconds = train_seconds;
  rec.valid = eval::evaluate_model(result.model, split,
                                   config.eval_options(data::Stage::kValid));
  rec.test = evaluate_test(config, split, result.model, rec.infer_seconds);
  write_metrics(layout.embed_dir(), "metrics.json", *rec.test);
  rec.extra["final_loss"] = result.losses.empty() ? 0.0 : result.losses.back();
  rec.wall_seconds = seconds_since(start);
  write_run_json(rec, layout.embed_dir());
  fmt::print("embedding table {} saved to {}\n", shape_string(result.item_embedding.shape()),
             layout.embed_file().string());
  fmt::print("{}", rec.test->to_table());
  return kOk;
}

int cmd_train_teacher(const RunConfig& config, const Clock::time_point start) {
  const Layout layout(config);
  const data::SplitDataset split = load_split(layout);
  const Tensor<float> items = load_item_table(layout);
  const fs::path dir = layout.teacher_dir();
  fs::create_directories(dir);
  const model::TrainResult result =
      train_teacher(config, split, items, dir, [&](const model::StepRecord& s) {
        if (config.log_every > 0 && s.step % config.log_every == 0) {
          fmt::print("step {} loss {:.5f} lr {:.3e} grad_norm {:.4f}\n", s.step, s.loss,
                     s.learning_rate, s.grad_norm);
        }
      });
  model::save_checkpoint(model::to_checkpoint(result.best), dir / kBestCheckpoint);
  write_text_file(dir / "train_log.csv", step_log_csv(result.steps));
  write_text_file(dir / "eval_log.csv", eval_log_csv(result.evals));

  RunRecord rec;
  rec.command = "train-teacher";
  rec.config = config;
  rec.layers = result.best.config.layers;
  rec.params = result.best.parameter_count(true);
  rec.total_params = result.best.parameter_count(false);
  std::vector<double> secs;
  for (const auto& s : result.steps) {
    secs.push_back(s.seconds);
  }
  rec.step_seconds = median_step_seconds(secs);
  rec.train_seconds = result.total_seconds;
  rec.valid = eval::evaluate_model(result.best, split, config.eval_options(data::Stage::kValid));
  rec.test = evaluate_test(config, split, result.best, rec.infer_seconds);
  rec.extra["best_step"] = result.best_step;
  rec.extra["best_valid_mrr"] = result.best_metric;
  write_metrics(dir, "metrics_valid.json", *rec.valid);
  write_metrics(dir, "metrics.json", *rec.test);
  rec.wall_seconds = seconds_since(start);
  write_run_json(rec, dir);
  fmt::print("best step {} valid MRR {:.5f}\n{}", result.best_step, result.best_metric,
             rec.test->to_table());
  return kOk;
}

int cmd_distill(const RunConfig& config, const Clock::time_point start) {
  const Layout layout(config);
  const data::SplitDataset split = load_split(layout);
  const Tensor<float> items = load_item_table(layout);
  const bool online = config.kd_mode == "online";
  model::DecoderWeights<float> teacher;
  if (!online) {
    teacher = load_model(layout.teacher_dir() / kBestCheckpoint);
  }
  const fs::path dir = layout.student_dir(config);
  fs::create_directories(dir);
  const distill::DistillResult result = run_distill(
      config, split, teacher, items, dir, [&](const distill::DistillStep& s) {
        if (config.log_every > 0 && s.step % config.log_every == 0) {
          fmt::print("step {} L_ce {:.5f} 1-D_cos {} D_norm {} L_ms {} total {:.5f}\n", s.step,
                     s.ce, opt(s.one_minus_cos), opt(s.norm), opt(s.multi_supervision),
                     s.total);
        }
      });
  model::save_checkpoint(distill::student_checkpoint(result.best_student, result.best_adapters),
                         dir / kBestCheckpoint);
  write_text_file(dir / "eval_log.csv", eval_log_csv(result.evals));

  RunRecord rec;
  rec.command = "distill";
  rec.config = config;
  rec.layers = result.best_student.config.layers;
  rec.params = result.best_student.parameter_count(true);
  rec.total_params = result.best_student.parameter_count(false);
  std::vector<double> secs;
  for (const auto& s : result.steps) {
    secs.push_back(s.seconds);
  }
  rec.step_seconds = median_step_seconds(secs);
  rec.train_seconds = result.total_seconds;
  rec.valid = eval::evaluate_model(result.best_student, split,
                                   config.eval_options(data::Stage::kValid));
  rec.test = evaluate_test(config, split, result.best_student, rec.infer_seconds);
  rec.extra["mode"] = config.kd_mode;
  rec.extra["best_step"] = result.best_step;
  rec.extra["best_valid_mrr"] = result.best_metric;
  rec.extra["adapter_params"] = result.best_adapters.parameter_count();
  rec.extra["teacher_cache_seconds"] = result.cache_seconds;
  write_metrics(dir, "metrics_valid.json", *rec.valid);
  write_metrics(dir, "metrics.json", *rec.test);
  rec.wall_seconds = seconds_since(start);
  write_run_json(rec, dir);
  fmt::print("best step {} valid MRR {:.5f}\n{}", result.best_step, result.best_metric,
             rec.test->to_table());
  return kOk;
}

int cmd_prune_sweep(const RunConfig& config, const Clock::time_point start) {
  const Layout layout(config);
  const data::SplitDataset split = load_split(layout);
  const model::DecoderWeights<float> embed_model = load_model(layout.embed_file());

  prune::SweepSpec spec;
  spec.layers = config.sweep_layers;
  spec.mode = config.sweep_kind();
  spec.eval = config.eval_options(data::Stage::kTest);
  spec.baseline = embed_model;
  if (spec.mode == prune::SweepMode::kDirectInference) {
    spec.teacher = load_model(layout.teacher_dir() / kBestCheckpoint);
  } else {
    spec.truncated.base = config.teacher_config(split.num_items);
    spec.truncated.item_embedding = embed_model.id_embedding;
    spec.truncated.train = config.train_options(false);
    spec.truncated.init_seed = derive_seed(config.seed, "teacher_init");
  }
  const std::vector<prune::SweepRow> rows = prune::run_sweep(spec, split);
  const fs::path dir = layout.sweep_dir(config);
  prune::write_sweep_csv(rows, dir / "sweep.csv");

  RunRecord rec;
  rec.command = "prune-sweep";
  rec.config = config;
  rec.extra["mode"] = config.sweep_mode;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    fmt::print("{:<10} l={:<3} MRR {} params {}\n", r.mode, r.layers,
               r.failed ? std::string("failed") : fmt::format("{:.5f}", r.metrics.mrr),
               r.params);
    rec.train_seconds += r.train_hours * 3600.0;
    rec.infer_seconds += r.infer_hours * 3600.0;
    table.push_back({{"l", r.layers}, {"mode", r.mode}, {"MRR", r.metrics.mrr},
                     {"failed", r.failed}, {"error", r.error}});
  }
  rec.extra["rows"] = table;
  rec.wall_seconds = seconds_since(start);
  write_run_json(rec, dir);
  return kOk;
}

int cmd_evaluate(const RunConfig& config, const Clock::time_point start,
                 const std::string& checkpoint, const std::string& checkpoint_dir,
                 const std::string& stage, std::int64_t layer, const std::string& out_dir) {
  const Layout layout(config);
  const data::SplitDataset split = load_split(layout);
  if (stage != "valid" && stage != "test") {
    throw ConfigError("--stage must be valid or test");
  }
  eval::EvalOptions options =
      config.eval_options(stage == "valid" ? data::Stage::kValid : data::Stage::kTest);
  options.layer = layer;
  fs::path path = checkpoint.empty() ? layout.teacher_dir() / kBestCheckpoint : fs::path(checkpoint);
  RunRecord rec;
  if (!checkpoint_dir.empty()) {
    const eval::CheckpointScore best = eval::select_best_checkpoint(checkpoint_dir, split, options);
    path = best.path;
    rec.extra["selected_step"] = best.step;
    rec.extra["selected_valid_mrr"] = best.metric;
    fmt::print("selected {} (step {}, valid MRR {:.5f})\n", path.string(), best.step, best.metric);
  }
  const model::DecoderWeights<float> weights = load_model(path);
  const auto eval_start = Clock::now();
  const eval::MetricsReport report = eval::evaluate_model(weights, split, options);
  const fs::path dir = out_dir.empty() ? layout.eval_dir() : fs::path(out_dir);
  write_metrics(dir, "metrics.json", report);
  rec.command = "evaluate";
  rec.config = config;
  rec.layers = weights.config.layers;
  rec.params = weights.parameter_count(true);
  rec.total_params = weights.parameter_count(false);
  rec.infer_seconds = seconds_since(eval_start);
  (stage == "valid" ? rec.valid : rec.test) = report;
  rec.extra["checkpoint"] = path.string();
  rec.wall_seconds = seconds_since(start);
  write_run_json(rec, dir);
  fmt::print("{}", report.to_table());
  return kOk;
}

int cmd_verify_theory(const RunConfig& config, const Clock::time_point start) {
  const Layout layout(config);
  const auto prop1 =
      theory::run_prop1_trials(config.seed, config.theory_trials, config.prop1_tolerance);
  double prop1_max = 0.0;
  std::int64_t prop1_pass = 0;
  for (const auto& r : prop1) {
    prop1_max = std::max(prop1_max, r.max_abs);
    prop1_pass += r.pass ? 1 : 0;
  }
  theory::GridOptions grid;
  grid.seed = config.seed;
  grid.tolerance = config.prop2_tolerance;
  const auto rows = theory::run_grid(grid);
  theory::write_grid_csv(rows, layout.theory_dir() / "theory.csv");
  double prop2_max = 0.0;
  std::int64_t prop2_pass = 0;
  for (const auto& r : rows) {
    prop2_max = std::max(prop2_max, r.max_err);
    prop2_pass += r.pass ? 1 : 0;
  }
  const bool ok = prop1_pass == static_cast<std::int64_t>(prop1.size()) &&
                  prop2_pass == static_cast<std::int64_t>(rows.size());
  fmt::print("single layer: {}/{} trials pass, max abs err {:.3e} (tol {:.0e})\n", prop1_pass,
             prop1.size(), prop1_max, config.prop1_tolerance);
  fmt::print("layer stack: {}/{} grid points pass, max abs err {:.3e} (tol {:.0e})\n",
             prop2_pass, rows.size(), prop2_max, config.prop2_tolerance);
  RunRecord rec;
  rec.command = "verify-theory";
  rec.config = config;
  rec.extra["prop1_trials"] = prop1.size();
  rec.extra["prop1_pass"] = prop1_pass;
  rec.extra["prop1_max_abs"] = prop1_max;
  rec.extra["prop2_points"] = rows.size();
  rec.extra["prop2_pass"] = prop2_pass;
  rec.extra["prop2_max_abs"] = prop2_max;
  rec.extra["all_pass"] = ok;
  rec.wall_seconds = seconds_since(start);
  write_run_json(rec, layout.theory_dir());
  if (!ok) {
    fmt::print(stderr, "verification failed\n");
    return kTrainingError;
  }
  return kOk;
}

int cmd_report(const RunConfig& config, const Clock::time_point start,
               const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const std::vector<ReportRow> rows = collect_report(paths);
  const std::string csv = report_csv(rows);
  fmt::print("{}", csv);
  const fs::path out_path = out.empty() ? Layout(config).root / "report" / "report.csv"
                                        : fs::path(out);
  write_text_file(out_path, csv);
  RunRecord rec;
  rec.command = "report";
  rec.config = config;
  rec.extra["runs"] = rows.size();
  if (const auto ratio = student_teacher_ratios(rows)) {
    rec.extra["param_ratio"] = ratio->params;
    if (ratio->step_seconds) {
      rec.extra["step_time_ratio"] = *ratio->step_seconds;
    }
  }
  rec.wall_seconds = seconds_since(start);
  write_run_json(rec, out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path());
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case Error::Category::kUsage:
      return kUsage;
    case Error::Category::kData:
      return kDataError;
    case Error::Category::kTraining:
      return kTrainingError;
  }
  return kTrainingError;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Desk-scale layer-distillation toolkit for sequential recommendation", "slmrec"};
  app.require_subcommand(1);
  CommonArgs common;
  std::string input, synthetic;
  auto* prepare = app.add_subcommand("prepare-data", "load or generate interactions and split");
  add_common(prepare, common);
  prepare->add_option("--input", input, "interaction TSV (user, item, rating, timestamp)");
  prepare->add_option("--synthetic", synthetic, "generator spec, e.g. \"users=2000 items=500\"");

  auto* pretrain = app.add_subcommand("pretrain-embed", "pretrain the item-ID embedding table");
  add_common(pretrain, common);
  auto* teacher = app.add_subcommand("train-teacher", "train the deep decoder");
  add_common(teacher, common);
  auto* distill_cmd = app.add_subcommand("distill", "train the shallow decoder with distillation");
  add_common(distill_cmd, common);

  std::string sweep_mode;
  auto* sweep = app.add_subcommand("prune-sweep", "layer-retention sweep");
  add_common(sweep, common);
  sweep->add_option("--mode", sweep_mode, "direct or truncated")
      ->check(CLI::IsMember({"direct", "truncated"}));

  std::string checkpoint, checkpoint_dir, stage = "test", eval_out;
  std::int64_t layer = -1;
  auto* evaluate = app.add_subcommand("evaluate", "rank evaluation of a checkpoint");
  add_common(evaluate, common);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file (default teacher/best.ckpt)");
  evaluate->add_option("--checkpoint-dir", checkpoint_dir,
                       "select the best checkpoint in this directory by validation MRR");
  evaluate->add_option("--stage", stage, "valid or test")->check(CLI::IsMember({"valid", "test"}));
  evaluate->add_option("--layer", layer, "score with this layer's hidden state");
  evaluate->add_option("--out", eval_out, "output directory (default <work_dir>/eval)");

  auto* verify = app.add_subcommand("verify-theory", "check the attention/gradient-step identities");
  add_common(verify, common);

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "consolidate run.json files into a CSV table");
  add_common(report, common);
  report->add_option("runs", report_dirs, "run directories")->required();
  report->add_option("--out", report_out, "CSV path (default <work_dir>/report/report.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const std::string& level = common.log_level;
  set_log_level(level == "debug"   ? LogLevel::kDebug
                : level == "warn"  ? LogLevel::kWarn
                : level == "error" ? LogLevel::kError
                                   : LogLevel::kInfo);
  const auto start = Clock::now();
  try {
    std::vector<std::string> extra;
    if (prepare->parsed()) {
      if (!input.empty() && !synthetic.empty()) {
        throw ConfigError("--input and --synthetic are exclusive");
      }
      if (!input.empty()) {
        extra.push_back("data.input=" + input);
      }
      if (!synthetic.empty()) {
        extra.push_back("data.input=");
        extra.push_back("data.synthetic=" + synthetic);
      }
    }
    if (sweep->parsed() && !sweep_mode.empty()) {
      extra.push_back("sweep.mode=" + sweep_mode);
    }
    const RunConfig config = common.resolve(extra);
    log_debug("config {} threads {}", config.hash(), thread_count());
    if (prepare->parsed()) return cmd_prepare_data(config, start);
    if (pretrain->parsed()) return cmd_pretrain_embed(config, start);
    if (teacher->parsed()) return cmd_train_teacher(config, start);
    if (distill_cmd->parsed()) return cmd_distill(config, start);
    if (sweep->parsed()) return cmd_prune_sweep(config, start);
    if (evaluate->parsed()) {
      return cmd_evaluate(config, start, checkpoint, checkpoint_dir, stage, layer, eval_out);
    }
    if (verify->parsed()) return cmd_verify_theory(config, start);
    if (report->parsed()) return cmd_report(config, start, report_dirs, report_out);
  } catch (const Error& e) {
    fmt::print(stderr, "slmrec: {}\n", e.what());
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "slmrec: I/O error: {}\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "slmrec: {}\n", e.what());
    return kTrainingError;
  }
  return kUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const std::string& a : args) {
    argv.push_back(a.c_str());
  }
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace slmrec::cli
