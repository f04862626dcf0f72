// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace slmrec::model {

// Shape of one decoder recommender. Item vocabulary is num_items + 1 with
// row 0 reserved for padding.
struct ModelConfig {
  std::int64_t layers = 8;
  std::int64_t hidden = 256;  // d1
  std::int64_t heads = 4;
  std::int64_t id_dim = 64;   // d0
  std::int64_t prefix_len = 4;
  std::int64_t seq_len = 50;
  std::int64_t num_items = 0;
  std::int64_t ffn_dim = 0;   // 0 selects the default gated width
  bool freeze_embedding = true;

  std::int64_t head_dim() const { return hidden / heads; }
  std::int64_t vocab() const { return num_items + 1; }
  std::int64_t positions() const { return prefix_len + seq_len; }
  // ffn_dim, or 2/3 of 4*hidden rounded up to a multiple of 8.
  std::int64_t resolved_ffn_dim() const;

  // Throws ConfigError naming the violated constraint.
  void validate() const;

  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  // Reads keys produced by to_pairs(); unknown keys raise ConfigError.
  static ModelConfig from_pairs(
      const std::vector<std::pair<std::string, std::string>>& pairs);

  bool operator==(const ModelConfig&) const = default;
};

// Parameter count of a model with this config. With trainable_only the
// frozen embedding table is excluded.
std::int64_t count_parameters(const ModelConfig& config, bool trainable_only);

}  // namespace slmrec::model
