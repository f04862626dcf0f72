// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slmrec/compute/tensor.h"
#include "slmrec/data/split.h"
#include "slmrec/distill/block_map.h"
#include "slmrec/distill/losses.h"
#include "slmrec/model/checkpoint.h"
#include "slmrec/model/decoder.h"
#include "slmrec/model/trainer.h"

namespace slmrec::distill {

enum class Mode { kOffline, kOnline };

struct DistillConfig {
  LossWeights weights;
  std::int64_t blocks = 4;
  Mode mode = Mode::kOffline;
  // When false (online only) the feature terms also train the teacher.
  bool detach_teacher = true;
};

// Block-wise d1 -> d0 maps used by the multi-supervision term, one per
// non-final block.
struct AdapterSet {
  std::vector<Tensor<float>> maps;

  static AdapterSet init(std::int64_t blocks, std::int64_t hidden, std::int64_t id_dim,
                         std::uint64_t seed);
  std::int64_t parameter_count() const;
};

// Student weights plus adapters as adapter.<k> tensors (k from 1).
model::Checkpoint student_checkpoint(const model::DecoderWeights<float>& student,
                                     const AdapterSet& adapters);
AdapterSet adapters_from_checkpoint(const model::Checkpoint& ckpt);

// Throws ConfigError when the pair cannot be distilled (hidden size,
// catalogue or block divisibility mismatch).
BlockMap check_pair(const model::ModelConfig& teacher,
                    const model::ModelConfig& student, std::int64_t blocks);

struct DistillStep {
  std::int64_t step = 0;
  double ce = 0.0;
  std::optional<double> one_minus_cos, norm, multi_supervision;
  double total = 0.0;
  double learning_rate = 0.0;
  double seconds = 0.0;
  double teacher_ce = 0.0;  // online mode only
};

struct DistillResult {
  std::vector<DistillStep> steps;
  std::vector<model::EvalRecord> evals;
  std::int64_t best_step = 0;
  double best_metric = 0.0;
  model::DecoderWeights<float> best_student;
  AdapterSet best_adapters;
  double total_seconds = 0.0;
  double cache_seconds = 0.0;  // offline teacher feature extraction
};

struct DistillOptions {
  model::TrainOptions train;  // checkpoint_prefix is forced to student_step
  DistillConfig kd;
  // Per-step CSV log (step, L_ce, 1-D_cos, D_norm, L_ms, total, lr).
  std::filesystem::path log_csv;
  std::function<void(const DistillStep&)> on_step;
};

// Trains the student (and adapters) against a frozen teacher. Teacher
// features of every training input are computed once up front; the teacher
// is never modified.
DistillResult distill_offline(const model::DecoderWeights<float>& teacher,
                              model::DecoderWeights<float>& student,
                              const data::SplitDataset& split,
                              const DistillOptions& options,
                              const model::Validator& validate);

// Trains teacher and student together from their current weights: each step
// applies the teacher's cross-entropy and the student's composite loss to
// the same batch.
DistillResult distill_online(model::DecoderWeights<float>& teacher,
                             model::DecoderWeights<float>& student,
                             const data::SplitDataset& split,
                             const DistillOptions& options,
                             const model::Validator& validate);

void write_step_log(const std::vector<DistillStep>& steps,
                    const std::filesystem::path& path);

}  // namespace slmrec::distill
