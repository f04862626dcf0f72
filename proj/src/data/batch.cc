// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/data/batch.h"

#include <algorithm>
#include <numeric>

#include "slmrec/common/errors.h"
#include "slmrec/common/random.h"

namespace slmrec::data {

PaddedSequence build_sequence(std::span<const std::int32_t> history,
                              std::int64_t seq_len) {
  if (seq_len < 1) {
    throw ConfigError("sequence length must be >= 1");
  }
  if (history.empty()) {
    throw DataError("empty history would produce an all-padding row");
  }
  PaddedSequence out;
  out.ids.assign(static_cast<std::size_t>(seq_len), kPadItem);
  out.mask.assign(static_cast<std::size_t>(seq_len), 0);
  const std::int64_t keep =
      std::min<std::int64_t>(seq_len, static_cast<std::int64_t>(history.size()));
  const std::int64_t src = static_cast<std::int64_t>(history.size()) - keep;
  const std::int64_t dst = seq_len - keep;
  for (std::int64_t i = 0; i < keep; ++i) {
    out.ids[dst + i] = history[src + i];
    out.mask[dst + i] = 1;
  }
  return out;
}

void Batch::append(const PaddedSequence& seq, std::int32_t label,
                   std::int32_t user_index, std::int32_t split_row) {
  ids.insert(ids.end(), seq.ids.begin(), seq.ids.end());
  mask.insert(mask.end(), seq.mask.begin(), seq.mask.end());
  labels.push_back(label);
  user_indices.push_back(user_index);
  split_rows.push_back(split_row);
  ++size;
}

bool has_training_example(const UserSplit& user) { return user.train.size() >= 2; }

std::vector<Batch> make_batches(const SplitDataset& split, std::int64_t seq_len,
                                std::int64_t batch_size, std::uint64_t seed,
                                std::int64_t epoch) {
  if (batch_size < 1) {
    throw ConfigError("batch size must be >= 1");
  }
  std::vector<std::int32_t> order;
  for (std::size_t i = 0; i < split.users.size(); ++i) {
    if (has_training_example(split.users[i])) {
      order.push_back(static_cast<std::int32_t>(i));
    }
  }
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order.begin(), order.end());

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    Batch batch;
    batch.seq_len = seq_len;
    for (std::size_t i = start; i < end; ++i) {
      const UserSplit& u = split.users[static_cast<std::size_t>(order[i])];
      std::span<const std::int32_t> input(u.train.data(), u.train.size() - 1);
      batch.append(build_sequence(input, seq_len), u.train.back(), u.user_index,
                   order[i]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<Batch> make_eval_batches(const SplitDataset& split, Stage stage,
                                     std::int64_t seq_len,
                                     std::int64_t batch_size) {
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < split.users.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(split.users.size(), start + static_cast<std::size_t>(batch_size));
    Batch batch;
    batch.seq_len = seq_len;
    for (std::size_t i = start; i < end; ++i) {
      batch.append(build_sequence(split.history(i, stage), seq_len),
                   split.target(i, stage), split.users[i].user_index,
                   static_cast<std::int32_t>(i));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

BatchStream::BatchStream(const SplitDataset& split, std::int64_t seq_len,
                         std::int64_t batch_size, std::uint64_t seed)
    : split_(split), seq_len_(seq_len), batch_size_(batch_size), seed_(seed) {
  current_ = make_batches(split_, seq_len_, batch_size_, seed_, epoch_);
  if (current_.empty()) {
    throw DataError("no user has a training example");
  }
}

const Batch& BatchStream::next() {
  if (cursor_ == current_.size()) {
    ++epoch_;
    current_ = make_batches(split_, seq_len_, batch_size_, seed_, epoch_);
    cursor_ = 0;
  }
  return current_[cursor_++];
}

}  // namespace slmrec::data
