// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slmrec/compute/tensor.h"
#include "slmrec/data/split.h"
#include "slmrec/eval/evaluate.h"
#include "slmrec/model/decoder.h"
#include "slmrec/model/trainer.h"

namespace slmrec::prune {

enum class SweepMode { kDirectInference, kTruncatedTraining };

std::string mode_name(SweepMode mode);

// Scores users with the hidden state after layer k through the unchanged
// head. Requires 1 <= k <= L; the weights are only read.
eval::MetricsReport direct_layer_inference(const model::DecoderWeights<float>& teacher,
                                           std::int64_t k, const data::SplitDataset& split,
                                           const eval::EvalOptions& options);

struct TruncatedSpec {
  std::int64_t layers = 1;
  model::ModelConfig base;     // everything except the depth
  Tensor<float> item_embedding;  // frozen pretrained table
  model::TrainOptions train;
  eval::EvalOptions eval;      // stage used for the reported metrics
  std::uint64_t init_seed = 0;
};

struct TruncatedResult {
  model::DecoderWeights<float> model;  // best validation checkpoint
  eval::MetricsReport report;
  model::TrainResult training;
  double infer_seconds = 0.0;
};

// Trains a fresh l-layer model with plain cross-entropy, selecting the best
// validation MRR, then evaluates it at spec.eval.stage.
TruncatedResult train_truncated(const TruncatedSpec& spec, const data::SplitDataset& split);

struct SweepRow {
  std::int64_t layers = 0;
  std::string mode;  // direct | truncated | baseline
  eval::MetricsReport metrics;
  std::int64_t params = 0;
  double train_hours = 0.0;
  double infer_hours = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepSpec {
  std::vector<std::int64_t> layers{1, 2, 4, 8};
  SweepMode mode = SweepMode::kTruncatedTraining;
  // Direct mode: the trained model to probe.
  std::optional<model::DecoderWeights<float>> teacher;
  // Truncated mode: template for every entry (layers is overwritten).
  TruncatedSpec truncated;
  eval::EvalOptions eval;
  // Optional baseline row (the pretrained next-item model).
  std::optional<model::DecoderWeights<float>> baseline;
  double baseline_train_seconds = 0.0;
};

// One row per entry in spec.layers, then the baseline row if any. A
// diverging entry is logged and recorded as failed; the sweep continues.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const data::SplitDataset& split);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

}  // namespace slmrec::prune
