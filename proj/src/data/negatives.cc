// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/data/negatives.h"

#include <algorithm>

#include "slmrec/common/errors.h"
#include "slmrec/common/random.h"

namespace slmrec::data {

std::uint64_t user_negative_seed(std::uint64_t seed, std::int32_t user_index) {
  return derive_seed(derive_seed(seed, "negatives"),
                     static_cast<std::uint64_t>(user_index));
}

std::vector<std::int32_t> sample_negatives(const SplitDataset& split,
                                           std::size_t user_pos,
                                           std::int32_t positive, int count,
                                           std::uint64_t seed) {
  const std::vector<std::int32_t> seen = split.interacted(user_pos);
  std::vector<std::int32_t> pool;
  pool.reserve(static_cast<std::size_t>(split.num_items));
  for (std::int32_t item = 1; item <= split.num_items; ++item) {
    if (!std::binary_search(seen.begin(), seen.end(), item)) {
      pool.push_back(item);
    }
  }
  if (static_cast<std::int64_t>(pool.size()) < count) {
    throw SamplingError("user " + std::to_string(split.users[user_pos].user_index) +
                        " has " + std::to_string(pool.size()) +
                        " non-interacted items, " + std::to_string(count) +
                        " negatives requested");
  }
  // Partial Fisher-Yates: the first `count` slots become the sample.
  Rng rng(seed);
  std::vector<std::int32_t> candidates;
  candidates.reserve(static_cast<std::size_t>(count) + 1);
  candidates.push_back(positive);
  for (int i = 0; i < count; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(rng.uniform_index(pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    candidates.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return candidates;
}

}  // namespace slmrec::data
