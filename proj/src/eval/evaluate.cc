// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/eval/evaluate.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "slmrec/common/log.h"
#include "slmrec/model/checkpoint.h"

#include "slmrec/common/errors.h"
#include "slmrec/common/threads.h"

namespace slmrec::eval {

std::vector<std::vector<std::int32_t>> build_candidates(const data::SplitDataset& split,
                                                        const EvalOptions& options) {
  std::vector<std::vector<std::int32_t>> out(split.users.size());
  for (std::size_t i = 0; i < split.users.size(); ++i) {
    out[i] = data::sample_negatives(
        split, i, split.target(i, options.stage), options.negatives,
        data::user_negative_seed(options.seed, split.users[i].user_index));
  }
  return out;
}

std::vector<std::int64_t> rank_users(const data::SplitDataset& split,
                                     std::int64_t seq_len, const EvalOptions& options,
                                     const ScoreFn& score) {
  const auto candidates = build_candidates(split, options);
  const std::vector<data::Batch> batches =
      data::make_eval_batches(split, options.stage, seq_len, options.batch_size);
  std::vector<std::int64_t> ranks(split.users.size(), 0);
  parallel_for(static_cast<std::int64_t>(batches.size()), [&](std::int64_t b) {
    const data::Batch& batch = batches[static_cast<std::size_t>(b)];
    const Tensor<float> scores = score(batch);
    if (scores.rows() != batch.size || scores.cols() != split.num_items) {
      throw EvaluationError("score function returned " + shape_string(scores.shape()) +
                            " for a batch of " + std::to_string(batch.size) +
                            " over " + std::to_string(split.num_items) + " items");
    }
    std::vector<float> picked;
    for (std::int64_t r = 0; r < batch.size; ++r) {
      const auto pos = static_cast<std::size_t>(batch.split_rows[r]);
      const auto& cand = candidates[pos];
      picked.resize(cand.size());
      for (std::size_t c = 0; c < cand.size(); ++c) {
        picked[c] = scores.at(r, cand[c] - 1);
        if (!std::isfinite(picked[c])) {
          throw EvaluationError(fmt::format("user {} has a non-finite score for item {}",
                                            split.users[pos].user_index, cand[c]));
        }
      }
      ranks[pos] = rank_of_positive(picked);
    }
  });
  return ranks;
}

MetricsReport evaluate_scores(const data::SplitDataset& split, std::int64_t seq_len,
                              const EvalOptions& options, const ScoreFn& score) {
  MetricAccumulator acc;
  for (std::int64_t rank : rank_users(split, seq_len, options, score)) {
    acc.add(rank);
  }
  MetricsReport report = MetricsReport::from(acc);
  report.negatives = options.negatives;
  report.stage = options.stage == data::Stage::kValid ? "valid" : "test";
  report.seed = options.seed;
  report.config_hash = options.config_hash;
  return report;
}

MetricsReport evaluate_model(const model::DecoderWeights<float>& weights,
                             const data::SplitDataset& split,
                             const EvalOptions& options) {
  const std::int64_t layers = weights.config.layers;
  const std::int64_t layer = options.layer < 0 ? layers : options.layer;
  if (layer > layers) {
    throw EvaluationError("layer " + std::to_string(layer) + " requested from a " +
                          std::to_string(layers) + "-layer model");
  }
  if (weights.config.num_items != split.num_items) {
    throw EvaluationError("model has " + std::to_string(weights.config.num_items) +
                          " items, dataset " + std::to_string(split.num_items));
  }
  MetricsReport report = evaluate_scores(
      split, weights.config.seq_len, options, [&](const data::Batch& batch) {
        return model::infer_scores(weights, model::SequenceView::of(batch), layer);
      });
  report.layer = layer;
  return report;
}

std::size_t select_best_checkpoint(const std::vector<CheckpointScore>& scores) {
  if (scores.empty()) {
    throw EvaluationError("no checkpoints to select from");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const bool better = scores[i].metric > scores[best].metric ||
                        (scores[i].metric == scores[best].metric &&
                         scores[i].step >= scores[best].step);
    if (better) {
      best = i;
    }
  }
  return best;
}

std::int64_t checkpoint_step(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  std::size_t start = stem.size();
  while (start > 0 && std::isdigit(static_cast<unsigned char>(stem[start - 1]))) {
    --start;
  }
  if (start == stem.size()) {
    return -1;
  }
  return std::stoll(stem.substr(start));
}

CheckpointScore select_best_checkpoint(const std::filesystem::path& dir,
                                       const data::SplitDataset& split,
                                       const EvalOptions& options) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("checkpoint directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ckpt") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<CheckpointScore> scores;
  for (const auto& path : paths) {
    try {
      const auto weights = model::weights_from_checkpoint(model::load_checkpoint(path));
      EvalOptions valid = options;
      valid.stage = data::Stage::kValid;
      const MetricsReport report = evaluate_model(weights, split, valid);
      scores.push_back({checkpoint_step(path), report.mrr, path});
    } catch (const Error& e) {
      log_warn("skipping checkpoint {}: {}", path.string(), e.what());
    }
  }
  if (scores.empty()) {
    throw EvaluationError("no readable checkpoint in " + dir.string());
  }
  return scores[select_best_checkpoint(scores)];
}

}  // namespace slmrec::eval
