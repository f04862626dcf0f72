// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "slmrec/cli/commands.h"
#include "slmrec/cli/pipeline.h"
#include "slmrec/cli/run_config.h"
#include "slmrec/common/errors.h"

namespace slmrec::cli {
namespace {

namespace fs = std::filesystem;

TEST(Config, ParsesKeyValueTextWithComments) {
  const auto kv = parse_key_values("# run\nseed = 4\n\nmodel.hidden=64\n", "test");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"seed", "4"}));
  EXPECT_THROW(parse_key_values("novalue\n", "test"), ConfigError);
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  EXPECT_THROW(resolve_config({{"model.depth", "3"}}), ConfigError);
  EXPECT_THROW(resolve_config({{"seed", "many"}}), ConfigError);
  EXPECT_THROW(resolve_config({{"profile", "nope"}}), ConfigError);
  EXPECT_THROW(resolve_config({{"distill.blocks", "3"}}), ConfigError);
}

TEST(Config, DefaultsFollowTheReferenceSettings) {
  const RunConfig c = resolve_config({});
  EXPECT_EQ(c.hidden, 256);
  EXPECT_EQ(c.teacher_layers, 8);
  EXPECT_EQ(c.student_layers, 4);
  EXPECT_EQ(c.blocks, 4);
  EXPECT_EQ(c.lambda1, 1.0);
  EXPECT_EQ(c.lambda2, 0.1);
  EXPECT_EQ(c.negatives, 999);
  EXPECT_EQ(c.seq_len, 50);
}

TEST(Config, ProfilesApplyBeforeOverrides) {
  EXPECT_EQ(resolve_config({{"profile", "music"}}).lambda3, 0.01);
  EXPECT_EQ(resolve_config({{"profile", "sport"}}).lambda3, 0.1);
  const RunConfig c = resolve_config({{"distill.lambda3", "0.5"}, {"profile", "music"}});
  EXPECT_EQ(c.profile, "music");
  EXPECT_EQ(c.lambda3, 0.5);
  for (const auto& name : RunConfig::profiles()) {
    EXPECT_NO_THROW(RunConfig::from_profile(name).validate()) << name;
  }
}

TEST(Config, TextRoundTripAndHash) {
  RunConfig c = resolve_config({{"seed", "9"}, {"sweep.layers", "1,3"}});
  const RunConfig back = resolve_config(parse_key_values(write_config_text(c), "round trip"));
  EXPECT_EQ(back.to_pairs(), c.to_pairs());
  EXPECT_EQ(back.hash(), c.hash());
  RunConfig renamed = c;
  renamed.work_dir = "elsewhere";
  renamed.distill_name = "other";
  EXPECT_EQ(renamed.hash(), c.hash());
  RunConfig changed = c;
  changed.seed = 10;
  EXPECT_NE(changed.hash(), c.hash());
}

TEST(Config, EveryKeyRoundTripsThroughGetAndSet) {
  RunConfig c = resolve_config({});
  for (const auto& key : RunConfig::keys()) {
    RunConfig d;
    d.set(key, c.get(key));
    EXPECT_EQ(d.get(key), c.get(key)) << key;
  }
}

TEST(Config, DerivedOptions) {
  const RunConfig c = resolve_config({{"train.student_max_steps", "7"}});
  EXPECT_EQ(c.train_options(true).max_steps, 7);
  EXPECT_EQ(c.train_options(false).max_steps, 1500);
  EXPECT_EQ(c.teacher_config(10).layers, 8);
  EXPECT_EQ(c.student_config(10).layers, 4);
  EXPECT_EQ(c.eval_options(data::Stage::kValid).config_hash, c.hash());
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "slmrec");
  return run(args);
}

TEST(Exit, UsageDataAndHelp) {
  EXPECT_EQ(run_cli({}), kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}), kUsage);
  EXPECT_EQ(run_cli({"--help"}), kOk);
  const fs::path dir = fs::temp_directory_path() / "slmrec_cli_exit";
  fs::remove_all(dir);
  EXPECT_EQ(run_cli({"prepare-data", "--work-dir", dir.string(), "--set", "model.depth=2"}),
            kUsage);
  EXPECT_EQ(run_cli({"train-teacher", "--work-dir", dir.string()}), kDataError);
  EXPECT_EQ(run_cli({"prepare-data", "--work-dir", dir.string(), "--input", "/nonexistent.tsv"}),
            kDataError);
}

std::vector<std::string> tiny_args(const fs::path& dir) {
  return {"--work-dir",
          dir.string(),
          "--log-level",
          "warn",
          "--set",
          "profile=desk",
          "--set",
          "data.synthetic=users=80 items=100",
          "--set",
          "model.hidden=16",
          "--set",
          "model.heads=2",
          "--set",
          "model.seq_len=8",
          "--set",
          "embed.dim=8",
          "--set",
          "embed.steps=5",
          "--set",
          "teacher.layers=4",
          "--set",
          "student.layers=2",
          "--set",
          "distill.blocks=2",
          "--set",
          "train.max_steps=8",
          "--set",
          "train.student_max_steps=6",
          "--set",
          "train.warmup_steps=2",
          "--set",
          "train.eval_steps=4",
          "--set",
          "eval.negatives=20",
          "--set",
          "sweep.layers=1,2"};
}

int run_tiny(const std::string& command, const fs::path& dir,
             std::vector<std::string> extra = {}) {
  std::vector<std::string> args{command};
  const auto common = tiny_args(dir);
  args.insert(args.end(), common.begin(), common.end());
  args.insert(args.end(), extra.begin(), extra.end());
  return run_cli(args);
}

nlohmann::json read_json(const fs::path& path) {
  return nlohmann::json::parse(read_text_file(path));
}

TEST(Pipeline, EveryCommandRunsAndWritesRunJson) {
  const fs::path dir = fs::temp_directory_path() / "slmrec_cli_pipeline";
  fs::remove_all(dir);
  const Layout layout(resolve_config({{"work_dir", dir.string()}}));
  ASSERT_EQ(run_tiny("prepare-data", dir), kOk);
  ASSERT_EQ(run_tiny("pretrain-embed", dir), kOk);
  ASSERT_EQ(run_tiny("train-teacher", dir), kOk);
  ASSERT_EQ(run_tiny("distill", dir), kOk);
  ASSERT_EQ(run_tiny("prune-sweep", dir, {"--mode", "direct"}), kOk);
  ASSERT_EQ(run_tiny("evaluate", dir,
                     {"--checkpoint", (layout.teacher_dir() / "best.ckpt").string()}),
            kOk);
  ASSERT_EQ(run_tiny("verify-theory", dir, {"--set", "theory.trials=10"}), kOk);
  ASSERT_EQ(run_tiny("report", dir,
                     {layout.teacher_dir().string(), (dir / "student").string(), "--out",
                      (dir / "report" / "report.csv").string()}),
            kOk);
  for (const fs::path& d : {layout.data_dir(), layout.embed_dir(), layout.teacher_dir(),
                            dir / "student", dir / "sweep_direct", layout.eval_dir(),
                            layout.theory_dir(), dir / "report"}) {
    ASSERT_TRUE(fs::exists(d / "run.json")) << d;
    const auto j = read_json(d / "run.json");
    EXPECT_TRUE(j.contains("command")) << d;
    EXPECT_TRUE(j.contains("config")) << d;
  }
  const auto teacher = read_json(layout.teacher_dir() / "run.json");
  const auto student = read_json(dir / "student" / "run.json");
  EXPECT_LT(student["params"].get<std::int64_t>(), teacher["params"].get<std::int64_t>());
  const std::string csv = read_text_file(dir / "report" / "report.csv");
  EXPECT_NE(csv.find("student/teacher"), std::string::npos);

  // The teacher's saved valid metrics are reproduced by re-evaluation.
  const auto saved = read_json(layout.teacher_dir() / "metrics_valid.json");
  ASSERT_EQ(run_tiny("evaluate", dir,
                     {"--checkpoint", (layout.teacher_dir() / "best.ckpt").string(), "--stage",
                      "valid", "--out", (dir / "eval_valid").string()}),
            kOk);
  const auto again = read_json(dir / "eval_valid" / "metrics.json");
  ASSERT_TRUE(saved.contains("MRR"));
  EXPECT_EQ(again["MRR"], saved["MRR"]);
}

TEST(Pipeline, SameConfigAndSeedGiveIdenticalMetrics) {
  std::string first;
  for (int trial = 0; trial < 2; ++trial) {
    const fs::path dir =
        fs::temp_directory_path() / ("slmrec_cli_determinism_" + std::to_string(trial));
    fs::remove_all(dir);
    ASSERT_EQ(run_tiny("prepare-data", dir), kOk);
    ASSERT_EQ(run_tiny("pretrain-embed", dir), kOk);
    ASSERT_EQ(run_tiny("train-teacher", dir), kOk);
    const std::string text = read_text_file(dir / "teacher" / "metrics.json");
    if (trial == 0) {
      first = text;
    } else {
      EXPECT_EQ(text, first);
    }
  }
}

TEST(Report, RatiosCompareStudentWithTeacher) {
  eval::MetricsReport m;
  m.mrr = 0.4;
  ReportRow teacher{"t", "train-teacher", 8, m, 1000, 0.1, 0.01, 0.2};
  m.mrr = 0.3;
  ReportRow student{"s", "distill", 4, m, 500, 0.05, 0.005, 0.1};
  const auto r = student_teacher_ratios({teacher, student});
  ASSERT_TRUE(r.has_value());
  EXPECT_DOUBLE_EQ(r->params, 0.5);
  EXPECT_DOUBLE_EQ(*r->step_seconds, 0.5);
  EXPECT_DOUBLE_EQ(*r->mrr, 0.75);
  EXPECT_FALSE(student_teacher_ratios({teacher}).has_value());
  const std::string csv = report_csv({teacher, student});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "run,l,mode,HR@1,HR@5,HR@10,NDCG@5,NDCG@10,MRR,params,train_hours,infer_hours,"
            "step_seconds");
}

}  // namespace
}  // namespace slmrec::cli
