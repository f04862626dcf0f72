// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slmrec/data/interactions.h"

namespace slmrec::data {

// Controllable interaction corpus. Each user belongs to one of `groups`
// taste groups; every group has its own fixed successor map over items.
// A step follows the successor of the previous item with probability
// transition_prob and otherwise draws from the user's latent-factor
// preference distribution softmax(u . v / temperature).
struct SyntheticSpec {
  std::int64_t users = 2000;
  std::int64_t items = 500;
  std::int64_t min_length = 12;
  std::int64_t max_length = 40;
  std::int64_t latent_dim = 8;
  std::int64_t groups = 2;
  double transition_prob = 0.7;
  double temperature = 0.5;
  // Probability of an extra low-rated (<= 3) event between steps.
  double negative_feedback_prob = 0.05;
  std::uint64_t seed = 7;

  // Parses whitespace- or comma-separated key=value pairs, e.g.
  // "users=2000 items=500". Unknown keys raise ConfigError.
  static SyntheticSpec parse(const std::string& text);
  std::string to_string() const;
};

std::vector<InteractionRecord> generate_synthetic(const SyntheticSpec& spec);

}  // namespace slmrec::data
