// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slmrec/data/split.h"

namespace slmrec::data {

struct PaddedSequence {
  std::vector<std::int32_t> ids;   // length T, left padded with kPadItem
  std::vector<std::uint8_t> mask;  // 1 on real positions
};

// Keeps the T most recent items and left-pads to length T.
PaddedSequence build_sequence(std::span<const std::int32_t> history,
                              std::int64_t seq_len);

// Row-major batch of padded sequences with one next-item label per row.
struct Batch {
  std::int64_t size = 0;
  std::int64_t seq_len = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> mask;
  std::vector<std::int32_t> labels;        // item index in 1..num_items
  std::vector<std::int32_t> user_indices;  // dense user index per row
  std::vector<std::int32_t> split_rows;    // position in SplitDataset::users

  void append(const PaddedSequence& seq, std::int32_t label,
              std::int32_t user_index, std::int32_t split_row);
};

// A user's training example: the train items except the last as input and
// the last train item as label. Users with fewer than 2 train items have
// no training example.
bool has_training_example(const UserSplit& user);

// One epoch of training batches in an order shuffled by (seed, epoch).
// The final batch may be smaller than batch_size.
std::vector<Batch> make_batches(const SplitDataset& split, std::int64_t seq_len,
                                std::int64_t batch_size, std::uint64_t seed,
                                std::int64_t epoch = 0);

// Evaluation batches in user order: history/target at the given stage.
std::vector<Batch> make_eval_batches(const SplitDataset& split, Stage stage,
                                     std::int64_t seq_len,
                                     std::int64_t batch_size);

// Endless sequence of training batches, reshuffled every epoch.
class BatchStream {
 public:
  BatchStream(const SplitDataset& split, std::int64_t seq_len,
              std::int64_t batch_size, std::uint64_t seed);

  const Batch& next();
  std::int64_t epoch() const { return epoch_; }
  std::int64_t batches_per_epoch() const {
    return static_cast<std::int64_t>(current_.size());
  }

 private:
  const SplitDataset& split_;
  std::int64_t seq_len_;
  std::int64_t batch_size_;
  std::uint64_t seed_;
  std::int64_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<Batch> current_;
};

}  // namespace slmrec::data
