// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/data/split.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <fmt/core.h>

#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"

namespace slmrec::data {
namespace {

std::int32_t parse_index(std::string_view text, const std::string& where) {
  std::int32_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("bad integer '" + std::string(text) + "' in " + where);
  }
  return v;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

SequenceSet build_user_sequences(const std::vector<InteractionRecord>& records) {
  SequenceSet set;
  set.maps.item_ids.push_back("<pad>");
  std::unordered_map<std::string, std::int32_t> user_index;
  std::unordered_map<std::string, std::int32_t> item_index;
  std::vector<std::vector<std::size_t>> per_user;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto [uit, unew] = user_index.try_emplace(
        r.user_id, static_cast<std::int32_t>(set.maps.user_ids.size()));
    if (unew) {
      set.maps.user_ids.push_back(r.user_id);
      per_user.emplace_back();
    }
    auto [iit, inew] = item_index.try_emplace(
        r.item_id, static_cast<std::int32_t>(set.maps.item_ids.size()));
    if (inew) {
      set.maps.item_ids.push_back(r.item_id);
    }
    per_user[static_cast<std::size_t>(uit->second)].push_back(i);
  }
  set.sequences.reserve(per_user.size());
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto& rows = per_user[u];
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return records[a].timestamp < records[b].timestamp;
    });
    UserSequence seq;
    seq.user_index = static_cast<std::int32_t>(u);
    seq.items.reserve(rows.size());
    for (std::size_t row : rows) {
      seq.items.push_back(item_index.at(records[row].item_id));
    }
    set.sequences.push_back(std::move(seq));
  }
  return set;
}

std::vector<std::int32_t> SplitDataset::interacted(std::size_t pos) const {
  const UserSplit& u = users.at(pos);
  std::vector<std::int32_t> all(u.train);
  all.push_back(u.valid);
  all.push_back(u.test);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::vector<std::int32_t> SplitDataset::history(std::size_t pos,
                                                Stage stage) const {
  const UserSplit& u = users.at(pos);
  std::vector<std::int32_t> h(u.train);
  if (stage == Stage::kTest) {
    h.push_back(u.valid);
  }
  return h;
}

std::int32_t SplitDataset::target(std::size_t pos, Stage stage) const {
  const UserSplit& u = users.at(pos);
  return stage == Stage::kValid ? u.valid : u.test;
}

SplitDataset chronological_split(const std::vector<UserSequence>& sequences,
                                 std::int32_t num_items) {
  SplitDataset split;
  split.num_items = num_items;
  std::int64_t dropped = 0;
  for (const auto& seq : sequences) {
    const std::size_t n = seq.items.size();
    if (n < 3) {
      ++dropped;
      continue;
    }
    UserSplit u;
    u.user_index = seq.user_index;
    u.train.assign(seq.items.begin(), seq.items.end() - 2);
    u.valid = seq.items[n - 2];
    u.test = seq.items[n - 1];
    split.interactions += static_cast<std::int64_t>(n);
    split.users.push_back(std::move(u));
  }
  if (dropped > 0) {
    log_warn("{} user sequences shorter than 3 excluded from the split", dropped);
  }
  return split;
}

PreparedData prepare_split(const std::vector<InteractionRecord>& records,
                           double positive_threshold, int min_actions) {
  PreparedData out;
  auto positive = filter_positive(records, positive_threshold);
  FilterResult filtered = filter_min_actions(positive, min_actions);
  out.filter_sweeps = filtered.sweeps;
  out.stats = compute_stats(filtered.records);
  SequenceSet seqs = build_user_sequences(filtered.records);
  out.split = chronological_split(seqs.sequences, seqs.maps.num_items());
  out.split.maps = std::move(seqs.maps);
  return out;
}

void write_split_manifest(const SplitDataset& split, const DatasetStats& stats,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "# slmrec-split v1\n";
  out << "# users=" << stats.users << "\n";
  out << "# items=" << split.num_items << "\n";
  out << "# interactions=" << stats.interactions << "\n";
  out << fmt::format("# density={:.9g}\n", stats.density);
  for (const auto& u : split.users) {
    out << u.user_index << '\t';
    for (std::size_t i = 0; i < u.train.size(); ++i) {
      if (i > 0) {
        out << ' ';
      }
      out << u.train[i];
    }
    out << '\t' << u.valid << '\t' << u.test << '\n';
  }
  if (!out) {
    throw IoError("write failure on " + path.string());
  }
}

SplitDataset read_split_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  SplitDataset split;
  bool have_items = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        continue;
      }
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "items") {
        split.num_items = parse_index(value, path.string());
        have_items = true;
      } else if (key == "interactions") {
        split.interactions = std::stoll(value);
      }
      continue;
    }
    const auto fields = split_on(line, '\t');
    if (fields.size() != 4) {
      throw FormatError("manifest line with " + std::to_string(fields.size()) +
                        " fields in " + path.string());
    }
    UserSplit u;
    u.user_index = parse_index(fields[0], path.string());
    if (!fields[1].empty()) {
      for (std::string_view item : split_on(fields[1], ' ')) {
        u.train.push_back(parse_index(item, path.string()));
      }
    }
    u.valid = parse_index(fields[2], path.string());
    u.test = parse_index(fields[3], path.string());
    split.users.push_back(std::move(u));
  }
  if (!have_items) {
    throw FormatError("manifest " + path.string() + " lacks an items= header");
  }
  for (const auto& u : split.users) {
    for (std::int32_t item : u.train) {
      if (item < 1 || item > split.num_items) {
        throw FormatError("item index " + std::to_string(item) +
                          " out of range in " + path.string());
      }
    }
  }
  return split;
}

void write_index_map(std::span<const std::string> ids, std::int32_t first_index,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  for (std::size_t i = static_cast<std::size_t>(first_index); i < ids.size(); ++i) {
    out << ids[i] << '\t' << i << '\n';
  }
}

std::vector<std::string> read_index_map(const std::filesystem::path& path,
                                        std::int32_t first_index) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::vector<std::string> ids(static_cast<std::size_t>(first_index));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw FormatError("index map line without a tab in " + path.string());
    }
    const std::int32_t index =
        parse_index(std::string_view(line).substr(tab + 1), path.string());
    if (index != static_cast<std::int32_t>(ids.size())) {
      throw FormatError("index map " + path.string() + " is not dense at " +
                        std::to_string(index));
    }
    ids.push_back(line.substr(0, tab));
  }
  return ids;
}

}  // namespace slmrec::data
