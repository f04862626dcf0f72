// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "slmrec/cli/run_config.h"
#include "slmrec/distill/distill.h"
#include "slmrec/eval/metrics.h"
#include "slmrec/model/decoder.h"
#include "slmrec/model/pretrain.h"
#include "slmrec/model/trainer.h"

namespace slmrec::cli {

// Directory layout under work_dir shared by all subcommands.
struct Layout {
  std::filesystem::path root;

  explicit Layout(const RunConfig& config) : root(config.work_dir) {}

  std::filesystem::path data_dir() const { return root / "data"; }
  std::filesystem::path split_file() const { return data_dir() / "split.tsv"; }
  std::filesystem::path embed_dir() const { return root / "embed"; }
  std::filesystem::path embed_file() const { return embed_dir() / "pretrain.ckpt"; }
  std::filesystem::path teacher_dir() const { return root / "teacher"; }
  std::filesystem::path student_dir(const RunConfig& c) const { return root / c.distill_name; }
  std::filesystem::path sweep_dir(const RunConfig& c) const {
    return root / ("sweep_" + c.sweep_mode);
  }
  std::filesystem::path theory_dir() const { return root / "theory"; }
  std::filesystem::path eval_dir() const { return root / "eval"; }
};

inline constexpr std::string_view kBestCheckpoint = "best.ckpt";

data::PreparedData prepare_data(const RunConfig& config);

// Fresh decoder whose item table is the given pretrained one.
model::DecoderWeights<float> fresh_model(const model::ModelConfig& config,
                                         const Tensor<float>& item_embedding,
                                         std::uint64_t seed, std::string_view stream);

// Validation MRR under the run's evaluation options.
model::Validator validation_mrr(const RunConfig& config, const data::SplitDataset& split);

model::TrainResult train_teacher(const RunConfig& config, const data::SplitDataset& split,
                                 const Tensor<float>& item_embedding,
                                 const std::filesystem::path& checkpoint_dir,
                                 const std::function<void(const model::StepRecord&)>& on_step = {});

// Offline: distils from `teacher` (left untouched). Online: trains a fresh
// teacher jointly for the teacher step budget; `teacher` is ignored.
distill::DistillResult run_distill(const RunConfig& config, const data::SplitDataset& split,
                                   const model::DecoderWeights<float>& teacher,
                                   const Tensor<float>& item_embedding,
                                   const std::filesystem::path& checkpoint_dir,
                                   const std::function<void(const distill::DistillStep&)>&
                                       on_step = {});

// Median of the per-step wall times.
double median_step_seconds(const std::vector<double>& seconds);

struct RunRecord {
  std::string command;
  RunConfig config;
  double wall_seconds = 0.0;
  std::int64_t params = 0;        // trainable parameters of the produced model
  std::int64_t total_params = 0;  // including frozen tables
  std::optional<double> step_seconds;
  double train_seconds = 0.0;
  double infer_seconds = 0.0;
  std::int64_t layers = 0;
  std::optional<eval::MetricsReport> valid;
  std::optional<eval::MetricsReport> test;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
};

void write_run_json(const RunRecord& record, const std::filesystem::path& dir);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

struct ReportRow {
  std::string run;
  std::string command;
  std::int64_t layers = 0;
  std::optional<eval::MetricsReport> metrics;  // test if present, else valid
  std::int64_t params = 0;
  double train_hours = 0.0;
  double infer_hours = 0.0;
  std::optional<double> step_seconds;
};

// One row per readable run.json; directories without one are skipped with
// a warning.
std::vector<ReportRow> collect_report(const std::vector<std::filesystem::path>& run_dirs);

struct Ratios {
  double params = 0.0;
  std::optional<double> step_seconds;
  std::optional<double> mrr;
};

// Student (distill) over teacher (train-teacher), using the first of each.
std::optional<Ratios> student_teacher_ratios(const std::vector<ReportRow>& rows);

std::string report_csv(const std::vector<ReportRow>& rows);

}  // namespace slmrec::cli
