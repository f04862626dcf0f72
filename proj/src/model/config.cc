// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/model/config.h"

#include "slmrec/common/errors.h"

namespace slmrec::model {

std::int64_t ModelConfig::resolved_ffn_dim() const {
  if (ffn_dim > 0) {
    return ffn_dim;
  }
  const std::int64_t raw = 2 * (4 * hidden) / 3;
  return 8 * ((raw + 7) / 8);
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (layers < 1) fail("layers must be >= 1");
  if (hidden < 1 || heads < 1) fail("hidden and heads must be >= 1");
  if (hidden % heads != 0) {
    fail("hidden " + std::to_string(hidden) + " not divisible by heads " +
         std::to_string(heads));
  }
  if (head_dim() % 2 != 0) {
    fail("head dim " + std::to_string(head_dim()) +
         " must be even for rotary encoding");
  }
  if (id_dim < 1) fail("id_dim must be >= 1");
  if (prefix_len < 0) fail("prefix_len must be >= 0");
  if (seq_len < 1) fail("seq_len must be >= 1");
  if (num_items < 1) fail("num_items must be >= 1");
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_pairs() const {
  return {
      {"layers", std::to_string(layers)},
      {"hidden", std::to_string(hidden)},
      {"heads", std::to_string(heads)},
      {"id_dim", std::to_string(id_dim)},
      {"prefix_len", std::to_string(prefix_len)},
      {"seq_len", std::to_string(seq_len)},
      {"num_items", std::to_string(num_items)},
      {"ffn_dim", std::to_string(ffn_dim)},
      {"freeze_embedding", freeze_embedding ? "1" : "0"},
  };
}

ModelConfig ModelConfig::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  ModelConfig c;
  for (const auto& [key, value] : pairs) {
    try {
      if (key == "layers") {
        c.layers = std::stoll(value);
      } else if (key == "hidden") {
        c.hidden = std::stoll(value);
      } else if (key == "heads") {
        c.heads = std::stoll(value);
      } else if (key == "id_dim") {
        c.id_dim = std::stoll(value);
      } else if (key == "prefix_len") {
        c.prefix_len = std::stoll(value);
      } else if (key == "seq_len") {
        c.seq_len = std::stoll(value);
      } else if (key == "num_items") {
        c.num_items = std::stoll(value);
      } else if (key == "ffn_dim") {
        c.ffn_dim = std::stoll(value);
      } else if (key == "freeze_embedding") {
        c.freeze_embedding = value == "1" || value == "true";
      } else {
        throw ConfigError("unknown model config key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad value '" + value + "' for model key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

std::int64_t count_parameters(const ModelConfig& c, bool trainable_only) {
  const std::int64_t d1 = c.hidden;
  const std::int64_t per_layer =
      4 * d1 * d1 + 3 * d1 * c.resolved_ffn_dim() + 2 * d1;
  std::int64_t total = c.id_dim * d1            // up projection
                       + c.prefix_len * d1      // prefix rows
                       + c.layers * per_layer   // decoder blocks
                       + d1                     // final norm gain
                       + d1 * c.id_dim;         // down projection
  if (!(trainable_only && c.freeze_embedding)) {
    total += c.vocab() * c.id_dim;
  }
  return total;
}

}  // namespace slmrec::model
