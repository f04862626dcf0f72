// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/data/interactions.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"

namespace slmrec::data {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

template <typename N>
bool parse_number(std::string_view text, N& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_row(std::string_view line, InteractionRecord& rec) {
  const auto fields = split_tabs(line);
  if (fields.size() != 4 || fields[0].empty() || fields[1].empty()) {
    return false;
  }
  double rating = 0.0;
  std::int64_t ts = 0;
  if (!parse_number(fields[2], rating) || !parse_number(fields[3], ts) ||
      ts < 0) {
    return false;
  }
  rec.user_id.assign(fields[0]);
  rec.item_id.assign(fields[1]);
  rec.rating = rating;
  rec.timestamp = ts;
  return true;
}

}  // namespace

LoadResult parse_interactions(const std::string& text) {
  LoadResult result;
  std::istringstream in(text);
  std::string line;
  std::int64_t data_rows = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    InteractionRecord rec;
    const bool ok = parse_row(line, rec);
    if (first) {
      first = false;
      if (!ok && split_tabs(line).size() == 4) {
        result.header_detected = true;
        continue;
      }
    }
    ++data_rows;
    if (ok) {
      result.records.push_back(std::move(rec));
    } else {
      ++result.malformed_rows;
    }
  }
  if (data_rows == 0) {
    log_warn("interaction log is empty");
  }
  if (result.malformed_rows > 0) {
    log_warn("{} of {} interaction rows are malformed", result.malformed_rows,
             data_rows);
    if (result.malformed_rows * 100 > data_rows) {
      throw FormatError(std::to_string(result.malformed_rows) + " of " +
                        std::to_string(data_rows) +
                        " rows malformed (limit 1%)");
    }
  }
  return result;
}

LoadResult load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failure on " + path.string());
  }
  return parse_interactions(buffer.str());
}

std::vector<InteractionRecord> filter_positive(
    const std::vector<InteractionRecord>& records, double threshold) {
  std::vector<InteractionRecord> kept;
  kept.reserve(records.size());
  for (const auto& r : records) {
    if (r.rating > threshold) {
      kept.push_back(r);
    }
  }
  return kept;
}

FilterResult filter_min_actions(const std::vector<InteractionRecord>& records,
                                int min_actions) {
  FilterResult result;
  result.records = records;
  while (true) {
    ++result.sweeps;
    std::unordered_map<std::string, int> user_count;
    std::unordered_map<std::string, int> item_count;
    for (const auto& r : result.records) {
      ++user_count[r.user_id];
      ++item_count[r.item_id];
    }
    std::vector<InteractionRecord> kept;
    kept.reserve(result.records.size());
    for (auto& r : result.records) {
      if (user_count[r.user_id] >= min_actions &&
          item_count[r.item_id] >= min_actions) {
        kept.push_back(std::move(r));
      }
    }
    const bool changed = kept.size() != result.records.size();
    result.records = std::move(kept);
    if (!changed) {
      break;
    }
  }
  return result;
}

DatasetStats compute_stats(const std::vector<InteractionRecord>& records) {
  std::unordered_set<std::string> users;
  std::unordered_set<std::string> items;
  for (const auto& r : records) {
    users.insert(r.user_id);
    items.insert(r.item_id);
  }
  DatasetStats stats;
  stats.users = static_cast<std::int64_t>(users.size());
  stats.items = static_cast<std::int64_t>(items.size());
  stats.interactions = static_cast<std::int64_t>(records.size());
  if (stats.users > 0 && stats.items > 0) {
    stats.density = static_cast<double>(stats.interactions) /
                    (static_cast<double>(stats.users) *
                     static_cast<double>(stats.items));
  }
  return stats;
}

}  // namespace slmrec::data
