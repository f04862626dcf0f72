// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "slmrec/compute/optim.h"
#include "slmrec/data/batch.h"
#include "slmrec/data/split.h"
#include "slmrec/model/decoder.h"

namespace slmrec::model {

struct StepRecord;

struct TrainOptions {
  AdamWConfig optim;
  LrSchedule::Kind schedule = LrSchedule::Kind::kCosine;
  std::int64_t warmup_steps = 50;
  // max_steps <= 0 trains for `epochs` passes over the users instead.
  std::int64_t max_steps = 1500;
  std::int64_t epochs = 1;
  std::int64_t batch_size = 32;
  std::int64_t eval_every = 50;
  std::uint64_t seed = 0;
  // When set, weights are saved as <dir>/<prefix><step>.ckpt at each eval.
  std::filesystem::path checkpoint_dir;
  std::string checkpoint_prefix = "step";
  std::function<void(const StepRecord&)> on_step;
};

struct StepRecord {
  std::int64_t step = 0;  // 1-based
  double loss = 0.0;
  double learning_rate = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

struct EvalRecord {
  std::int64_t step = 0;
  double metric = 0.0;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  std::int64_t best_step = 0;
  double best_metric = 0.0;
  DecoderWeights<float> best;
  double total_seconds = 0.0;
};

// Validation score of the current weights; higher is better.
using Validator =
    std::function<double(const DecoderWeights<float>& weights, std::int64_t step)>;

// Steps implied by the options for a dataset with this many batches per epoch.
std::int64_t resolve_max_steps(const TrainOptions& options,
                               std::int64_t batches_per_epoch);

AdamW<float> make_optimizer(DecoderWeights<float>& weights,
                            const TrainOptions& options, std::int64_t total_steps);

// Next-item labels of a batch as score columns (item - 1).
std::vector<std::int32_t> label_columns(const data::Batch& batch);

// Cross-entropy of the last-position scores against the batch labels,
// one backward pass and one optimizer update. A non-finite loss or
// gradient raises TrainingError naming the step.
StepRecord train_step(DecoderWeights<float>& weights, AdamW<float>& optimizer,
                      const data::Batch& batch);

// Plain supervised training. The validator runs every eval_every steps and
// after the last step; the best-scoring weights are kept (ties go to the
// later step).
TrainResult fit_supervised(DecoderWeights<float>& weights,
                           const data::SplitDataset& split,
                           const TrainOptions& options, const Validator& validate);

}  // namespace slmrec::model
