// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "slmrec/compute/tensor.h"
#include "slmrec/data/batch.h"
#include "slmrec/data/negatives.h"
#include "slmrec/data/split.h"
#include "slmrec/eval/metrics.h"
#include "slmrec/model/decoder.h"

namespace slmrec::eval {

struct EvalOptions {
  data::Stage stage = data::Stage::kValid;
  int negatives = data::kDefaultNegatives;
  std::uint64_t seed = 0;
  std::int64_t batch_size = 128;
  // Layer whose hidden state represents the user; < 0 means the last one.
  std::int64_t layer = -1;
  std::string config_hash;
};

// Full-catalogue scores [batch, num_items] for a batch of eval sequences.
using ScoreFn = std::function<Tensor<float>(const data::Batch& batch)>;

// Candidate lists (positive first) for every user at a stage. Deterministic
// in (split, stage, negatives, seed).
std::vector<std::vector<std::int32_t>> build_candidates(const data::SplitDataset& split,
                                                        const EvalOptions& options);

// Per-user pessimistic ranks of the positive among its candidates, in user
// order. Batches are scored in parallel (see thread_count()).
std::vector<std::int64_t> rank_users(const data::SplitDataset& split,
                                     std::int64_t seq_len, const EvalOptions& options,
                                     const ScoreFn& score);

MetricsReport evaluate_scores(const data::SplitDataset& split, std::int64_t seq_len,
                              const EvalOptions& options, const ScoreFn& score);

MetricsReport evaluate_model(const model::DecoderWeights<float>& weights,
                             const data::SplitDataset& split,
                             const EvalOptions& options);

struct CheckpointScore {
  std::int64_t step = 0;
  double metric = 0.0;
  std::filesystem::path path;
};

// Index of the highest metric; ties go to the later step. Throws
// EvaluationError on an empty list.
std::size_t select_best_checkpoint(const std::vector<CheckpointScore>& scores);

// Trailing digits of the file stem ("step300.ckpt" -> 300), -1 if none.
std::int64_t checkpoint_step(const std::filesystem::path& path);

// Evaluates every *.ckpt in dir on validation and returns the best by MRR.
// Unreadable or corrupt files are skipped with a warning.
CheckpointScore select_best_checkpoint(const std::filesystem::path& dir,
                                       const data::SplitDataset& split,
                                       const EvalOptions& options);

}  // namespace slmrec::eval
