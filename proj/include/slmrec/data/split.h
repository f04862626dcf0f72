// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slmrec/data/interactions.h"

namespace slmrec::data {

inline constexpr std::int32_t kPadItem = 0;

// Dense index <-> raw id maps. Item index 0 is the padding slot, so
// item_ids[0] is a placeholder and real items are 1..num_items.
struct IndexMaps {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  std::int32_t num_items() const {
    return static_cast<std::int32_t>(item_ids.size()) - 1;
  }
};

struct UserSequence {
  std::int32_t user_index = 0;
  std::vector<std::int32_t> items;  // chronological, dense item indices
};

struct SequenceSet {
  std::vector<UserSequence> sequences;
  IndexMaps maps;
};

// Orders each user's records by timestamp (ties keep input order) and
// assigns dense indices in order of first appearance.
SequenceSet build_user_sequences(const std::vector<InteractionRecord>& records);

struct UserSplit {
  std::int32_t user_index = 0;
  std::vector<std::int32_t> train;
  std::int32_t valid = kPadItem;
  std::int32_t test = kPadItem;
};

enum class Stage { kValid, kTest };

struct SplitDataset {
  std::vector<UserSplit> users;
  std::int32_t num_items = 0;
  std::int64_t interactions = 0;
  IndexMaps maps;

  std::int64_t num_users() const { return static_cast<std::int64_t>(users.size()); }

  // Sorted, de-duplicated train + valid + test items of users[pos].
  std::vector<std::int32_t> interacted(std::size_t pos) const;

  // Input history and target for evaluation at the given stage.
  std::vector<std::int32_t> history(std::size_t pos, Stage stage) const;
  std::int32_t target(std::size_t pos, Stage stage) const;
};

// Last item -> test, second to last -> valid, the rest -> train. Sequences
// shorter than 3 are dropped with a warning.
SplitDataset chronological_split(const std::vector<UserSequence>& sequences,
                                 std::int32_t num_items);

// Full preprocessing: positive filter, min-action filter, sequences, split.
struct PreparedData {
  SplitDataset split;
  DatasetStats stats;  // after filtering
  int filter_sweeps = 0;
};

PreparedData prepare_split(const std::vector<InteractionRecord>& records,
                           double positive_threshold = 3.0, int min_actions = 5);

// Text manifest: `key=value` header lines starting with '#', then one line
// per user: `user_index \t train items (space separated) \t valid \t test`.
void write_split_manifest(const SplitDataset& split, const DatasetStats& stats,
                          const std::filesystem::path& path);
SplitDataset read_split_manifest(const std::filesystem::path& path);

// Two-column TSV: raw id, dense index.
void write_index_map(std::span<const std::string> ids, std::int32_t first_index,
                     const std::filesystem::path& path);
std::vector<std::string> read_index_map(const std::filesystem::path& path,
                                        std::int32_t first_index);

}  // namespace slmrec::data
