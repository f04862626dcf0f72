// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "slmrec/data/split.h"

namespace slmrec::data {

inline constexpr int kDefaultNegatives = 999;

// The user's positive followed by `count` distinct items drawn uniformly
// from those the user never interacted with (train, valid or test). The
// positive is always candidates[0]. Throws SamplingError when the catalog
// is too small.
std::vector<std::int32_t> sample_negatives(const SplitDataset& split,
                                           std::size_t user_pos,
                                           std::int32_t positive, int count,
                                           std::uint64_t seed);

// Per-user stream seed so users can be sampled independently.
std::uint64_t user_negative_seed(std::uint64_t seed, std::int32_t user_index);

}  // namespace slmrec::data
