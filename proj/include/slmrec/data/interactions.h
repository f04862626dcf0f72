// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace slmrec::data {

struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::int64_t timestamp = 0;  // seconds, >= 0
};

struct LoadResult {
  std::vector<InteractionRecord> records;
  std::int64_t malformed_rows = 0;
  bool header_detected = false;
};

// Reads `user_id \t item_id \t rating \t timestamp` lines. A first line
// whose rating or timestamp column is not numeric is treated as a header.
// Throws IoError when unreadable and FormatError when more than 1% of the
// data rows are malformed.
LoadResult load_interactions(const std::filesystem::path& path);

// Parses the same format from an in-memory buffer.
LoadResult parse_interactions(const std::string& text);

// Keeps ratings strictly above the threshold.
std::vector<InteractionRecord> filter_positive(
    const std::vector<InteractionRecord>& records, double threshold = 3.0);

struct FilterResult {
  std::vector<InteractionRecord> records;
  // Number of passes made, including the final pass that removed nothing.
  int sweeps = 0;
};

// Repeatedly drops users and items with fewer than min_actions records
// until no more records are removed.
FilterResult filter_min_actions(const std::vector<InteractionRecord>& records,
                                int min_actions = 5);

struct DatasetStats {
  std::int64_t users = 0;
  std::int64_t items = 0;
  std::int64_t interactions = 0;
  double density = 0.0;  // interactions / (users * items)
};

DatasetStats compute_stats(const std::vector<InteractionRecord>& records);

}  // namespace slmrec::data
