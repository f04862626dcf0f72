// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slmrec/compute/tensor.h"
#include "slmrec/data/batch.h"
#include "slmrec/data/split.h"
#include "slmrec/model/decoder.h"

namespace slmrec::model {

// Small sequential recommender trained with next-item prediction at every
// position. Its item table initialises (and is then frozen in) the larger
// decoders.
struct PretrainOptions {
  std::int64_t id_dim = 64;
  std::int64_t layers = 2;
  std::int64_t heads = 2;
  std::int64_t seq_len = 50;
  std::int64_t steps = 600;
  std::int64_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// Rows of the flattened [batch * seq_len] grid that have a next item, and
// that item as a score column: position t predicts ids[t + 1], the last
// position predicts the batch label.
struct NextItemTargets {
  std::vector<std::int64_t> rows;
  std::vector<std::int32_t> columns;
};
NextItemTargets next_item_targets(const data::Batch& batch);

ModelConfig pretrain_config(const PretrainOptions& options, std::int64_t num_items);

struct PretrainResult {
  Tensor<float> item_embedding;  // [num_items + 1, id_dim], row 0 zero
  DecoderWeights<float> model;   // the trained next-item model itself
  std::vector<double> losses;
};

PretrainResult pretrain_id_embeddings(const data::SplitDataset& split,
                                      const PretrainOptions& options);

}  // namespace slmrec::model
