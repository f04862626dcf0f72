// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "slmrec/common/errors.h"
#include "slmrec/data/batch.h"
#include "slmrec/data/interactions.h"
#include "slmrec/data/negatives.h"
#include "slmrec/data/split.h"
#include "slmrec/data/synthetic.h"

namespace slmrec::data {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("slmrec_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

InteractionRecord rec(std::string u, std::string i, double r, std::int64_t t) {
  return {std::move(u), std::move(i), r, t};
}

TEST(Interactions, ParsesRowsAndDetectsHeader) {
  const auto r = parse_interactions("user\titem\trating\ttime\nu1\ti1\t5\t10\nu1\ti2\t4.5\t11\n");
  EXPECT_TRUE(r.header_detected);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[1].item_id, "i2");
  EXPECT_DOUBLE_EQ(r.records[1].rating, 4.5);
  EXPECT_EQ(r.records[1].timestamp, 11);
}

TEST(Interactions, TooManyMalformedRowsIsAFormatError) {
  EXPECT_THROW(parse_interactions("u1\ti1\t5\t10\nu1\ti2\tfive\t11\n"), FormatError);
}

TEST(Interactions, MissingFileIsAnIoError) {
  EXPECT_THROW(load_interactions("/nonexistent/slmrec/data.tsv"), IoError);
}

TEST(Interactions, PositiveFilterIsStrict) {
  const std::vector<InteractionRecord> in{rec("u", "a", 3.0, 1), rec("u", "b", 3.5, 2),
                                          rec("u", "c", 5.0, 3)};
  const auto out = filter_positive(in);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].item_id, "b");
}

TEST(Interactions, MinActionFilterIteratesToAFixedPoint) {
  // u3 has 5 actions but item "x" is used only by u3; dropping x leaves u3
  // with 4 actions, so u3 goes in the second sweep.
  std::vector<InteractionRecord> in;
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 5; ++i) {
      in.push_back(rec("u" + std::to_string(u), "i" + std::to_string(i), 5, u * 10 + i));
    }
  }
  for (int i = 0; i < 4; ++i) {
    in.push_back(rec("w", "i" + std::to_string(i), 5, 100 + i));
  }
  in.push_back(rec("w", "x", 5, 200));
  const auto r = filter_min_actions(in, 5);
  EXPECT_EQ(r.records.size(), 25u);
  EXPECT_GE(r.sweeps, 3);
  for (const auto& x : r.records) {
    EXPECT_NE(x.user_id, "w");
  }
}

TEST(Interactions, StatsCountDistinctUsersAndItems) {
  const std::vector<InteractionRecord> in{rec("a", "x", 5, 1), rec("a", "y", 5, 2),
                                          rec("b", "x", 5, 3)};
  const auto s = compute_stats(in);
  EXPECT_EQ(s.users, 2);
  EXPECT_EQ(s.items, 2);
  EXPECT_EQ(s.interactions, 3);
  EXPECT_DOUBLE_EQ(s.density, 0.75);
}

TEST(Split, SequencesAreChronologicalWithStableTies) {
  const std::vector<InteractionRecord> in{rec("u", "c", 5, 3), rec("u", "a", 5, 1),
                                          rec("u", "b", 5, 3)};
  const auto set = build_user_sequences(in);
  ASSERT_EQ(set.sequences.size(), 1u);
  // item indices follow first appearance: c=1, a=2, b=3
  EXPECT_EQ(set.sequences[0].items, (std::vector<std::int32_t>{2, 1, 3}));
  EXPECT_EQ(set.maps.item_ids[1], "c");
}

TEST(Split, LeaveLastOutAssignsValidAndTest) {
  std::vector<UserSequence> seqs{{0, {1, 2, 3, 4}}, {1, {2, 3}}};
  const auto split = chronological_split(seqs, 4);
  ASSERT_EQ(split.users.size(), 1u);  // the length-2 sequence is dropped
  EXPECT_EQ(split.users[0].train, (std::vector<std::int32_t>{1, 2}));
  EXPECT_EQ(split.users[0].valid, 3);
  EXPECT_EQ(split.users[0].test, 4);
  EXPECT_EQ(split.history(0, Stage::kValid), (std::vector<std::int32_t>{1, 2}));
  EXPECT_EQ(split.history(0, Stage::kTest), (std::vector<std::int32_t>{1, 2, 3}));
  EXPECT_EQ(split.target(0, Stage::kTest), 4);
}

TEST(Split, ManifestRoundTrips) {
  const auto prepared = prepare_split(generate_synthetic(SyntheticSpec::parse("users=60 items=40")));
  const fs::path dir = temp_dir("manifest");
  write_split_manifest(prepared.split, prepared.stats, dir / "split.tsv");
  const auto back = read_split_manifest(dir / "split.tsv");
  ASSERT_EQ(back.users.size(), prepared.split.users.size());
  EXPECT_EQ(back.num_items, prepared.split.num_items);
  for (std::size_t u = 0; u < back.users.size(); ++u) {
    EXPECT_EQ(back.users[u].train, prepared.split.users[u].train);
    EXPECT_EQ(back.users[u].valid, prepared.split.users[u].valid);
    EXPECT_EQ(back.users[u].test, prepared.split.users[u].test);
  }
}

TEST(Split, CorruptManifestIsAFormatError) {
  const fs::path dir = temp_dir("corrupt");
  std::ofstream(dir / "split.tsv") << "#num_items=5\n0\t1 2\tnine\t3\n";
  EXPECT_THROW(read_split_manifest(dir / "split.tsv"), FormatError);
}

TEST(Split, IndexMapRoundTrips) {
  const fs::path dir = temp_dir("index");
  const std::vector<std::string> ids{"<pad>", "a", "b", "c"};
  write_index_map(ids, 1, dir / "items.tsv");
  const auto back = read_index_map(dir / "items.tsv", 1);
  ASSERT_GE(back.size(), 4u);
  EXPECT_EQ(back[3], "c");
}

TEST(Synthetic, IsDeterministicAndRespectsSpec) {
  const auto spec = SyntheticSpec::parse("users=50 items=30 seed=3");
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].item_id, b[i].item_id);
    EXPECT_EQ(a[i].timestamp, b[i].timestamp);
  }
  std::set<std::string> users;
  for (const auto& r : a) {
    users.insert(r.user_id);
  }
  EXPECT_EQ(users.size(), 50u);
  EXPECT_EQ(SyntheticSpec::parse(spec.to_string()).to_string(), spec.to_string());
}

TEST(Synthetic, UnknownKeyIsAConfigError) {
  EXPECT_THROW(SyntheticSpec::parse("users=10 colour=blue"), ConfigError);
}

TEST(Batch, SequencesKeepMostRecentAndLeftPad) {
  const std::vector<std::int32_t> h{1, 2, 3, 4, 5};
  const auto s = build_sequence(h, 3);
  EXPECT_EQ(s.ids, (std::vector<std::int32_t>{3, 4, 5}));
  const auto p = build_sequence(std::span<const std::int32_t>(h).first(2), 4);
  EXPECT_EQ(p.ids, (std::vector<std::int32_t>{0, 0, 1, 2}));
  EXPECT_EQ(p.mask, (std::vector<std::uint8_t>{0, 0, 1, 1}));
}

TEST(Batch, EpochCoversEveryTrainingUserOnce) {
  const auto prepared = prepare_split(generate_synthetic(SyntheticSpec::parse("users=80 items=40")));
  const auto& split = prepared.split;
  const auto batches = make_batches(split, 8, 16, 5);
  std::multiset<std::int32_t> seen;
  for (const Batch& b : batches) {
    EXPECT_LE(b.size, 16);
    for (std::int64_t r = 0; r < b.size; ++r) {
      seen.insert(b.split_rows[r]);
      const UserSplit& u = split.users[b.split_rows[r]];
      EXPECT_EQ(b.labels[r], u.train.back());
      EXPECT_GE(b.labels[r], 1);
      EXPECT_LE(b.labels[r], split.num_items);
    }
  }
  std::int64_t expected = 0;
  for (const auto& u : split.users) {
    expected += has_training_example(u) ? 1 : 0;
  }
  EXPECT_EQ(static_cast<std::int64_t>(seen.size()), expected);
  for (std::int32_t r : seen) {
    EXPECT_EQ(seen.count(r), 1u);
  }
  // Different epochs reshuffle.
  const auto other = make_batches(split, 8, 16, 5, 1);
  EXPECT_NE(batches[0].split_rows, other[0].split_rows);
}

TEST(Negatives, PositiveFirstDistinctAndUnseen) {
  const auto prepared = prepare_split(generate_synthetic(SyntheticSpec::parse("users=40 items=200")));
  const auto& split = prepared.split;
  const std::int32_t pos = split.target(0, Stage::kTest);
  const auto c = sample_negatives(split, 0, pos, 50, user_negative_seed(1, 0));
  ASSERT_EQ(c.size(), 51u);
  EXPECT_EQ(c[0], pos);
  const auto seen = split.interacted(0);
  std::set<std::int32_t> uniq(c.begin() + 1, c.end());
  EXPECT_EQ(uniq.size(), 50u);
  for (std::int32_t i : uniq) {
    EXPECT_FALSE(std::binary_search(seen.begin(), seen.end(), i));
    EXPECT_GE(i, 1);
    EXPECT_LE(i, split.num_items);
  }
  EXPECT_EQ(c, sample_negatives(split, 0, pos, 50, user_negative_seed(1, 0)));
}

TEST(Negatives, TooSmallCatalogIsASamplingError) {
  const auto prepared = prepare_split(generate_synthetic(SyntheticSpec::parse("users=40 items=30")));
  EXPECT_THROW(sample_negatives(prepared.split, 0, prepared.split.target(0, Stage::kTest), 999, 1),
               SamplingError);
}

}  // namespace
}  // namespace slmrec::data
