// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slmrec/compute/graph.h"
#include "slmrec/compute/tensor.h"
#include "slmrec/data/batch.h"
#include "slmrec/model/config.h"

namespace slmrec::model {

template <typename T>
struct LayerWeights {
  Tensor<T> attn_norm;  // [d1]
  Tensor<T> wq, wk, wv, wo;  // [d1, d1]
  Tensor<T> ffn_norm;   // [d1]
  Tensor<T> w_gate, w_up;  // [d1, d_ff]
  Tensor<T> w_down;     // [d_ff, d1]

  bool operator==(const LayerWeights&) const = default;
};

// All learnable parameters of one decoder recommender.
template <typename T>
struct DecoderWeights {
  ModelConfig config;
  Tensor<T> id_embedding;  // [vocab, d0], row 0 is padding and stays zero
  Tensor<T> up_proj;       // [d0, d1]
  Tensor<T> prefix;        // [P, d1]
  std::vector<LayerWeights<T>> layers;
  Tensor<T> final_norm;    // [d1]
  Tensor<T> down_proj;     // [d1, d0]

  // Visits every tensor in a fixed order with its canonical name and
  // whether the optimizer may update it.
  void visit(const std::function<void(const std::string&, Tensor<T>&, bool)>& fn);
  void visit(const std::function<void(const std::string&, const Tensor<T>&, bool)>&
                 fn) const;

  std::int64_t parameter_count(bool trainable_only) const;

  template <typename U>
  DecoderWeights<U> cast() const;

  bool operator==(const DecoderWeights&) const = default;
};

// Truncated-normal (sigma 0.02) projections and prefix, unit norm gains,
// zeroed padding row. Deterministic in (config, seed).
template <typename T>
DecoderWeights<T> init_model(const ModelConfig& config, std::uint64_t seed);

// Parameters bound onto one graph.
template <typename T>
struct BoundModel {
  Var<T> id_embedding, up_proj, prefix, final_norm, down_proj;
  struct Layer {
    Var<T> attn_norm, wq, wk, wv, wo, ffn_norm, w_gate, w_up, w_down;
  };
  std::vector<Layer> layers;
  // Trainable parameters in DecoderWeights::visit order.
  std::vector<Var<T>> trainable;
};

// With trainable = false nothing is marked as requiring a gradient.
template <typename T>
BoundModel<T> bind_model(Graph<T>& graph, const DecoderWeights<T>& weights,
                         bool trainable = true);

// Padded id grid plus mask, row-major [batch, seq_len].
struct SequenceView {
  std::int64_t batch = 0;
  std::int64_t seq_len = 0;
  std::span<const std::int32_t> ids;
  std::span<const std::uint8_t> mask;

  static SequenceView of(const data::Batch& b) {
    return {b.size, b.seq_len, b.ids, b.mask};
  }
};

template <typename T>
struct ForwardTrace {
  std::int64_t batch = 0;
  std::int64_t positions = 0;  // P + T
  std::int64_t prefix_len = 0;
  std::vector<Var<T>> hidden;  // layers + 1 entries of [batch * positions, d1]
  // Flattened row of the last real position of each sequence.
  std::vector<std::int64_t> last_rows;
  // Key mask over all positions (prefix positions are 1).
  std::vector<std::uint8_t> full_mask;
};

// ids -> embedding table -> up projection, preceded by the prefix rows.
// Returns [batch * (P + T), d1].
template <typename T>
Var<T> embed_sequence(const BoundModel<T>& model, const ModelConfig& config,
                      const SequenceView& input);

// Pre-norm decoder blocks with rotary, causal and key-padding masked
// attention followed by a gated feed-forward. Keeps every hidden state.
// depth < 0 runs all layers; otherwise only the first depth blocks.
template <typename T>
ForwardTrace<T> decoder_forward(const BoundModel<T>& model,
                                const ModelConfig& config, Var<T> embedded,
                                const SequenceView& input, std::int64_t depth = -1);

template <typename T>
ForwardTrace<T> forward(const BoundModel<T>& model, const ModelConfig& config,
                        const SequenceView& input, std::int64_t depth = -1);

// Hidden state of layer k at each sequence's last real position: [batch, d1].
template <typename T>
Var<T> user_representation(const ForwardTrace<T>& trace, std::int64_t layer);

// Final norm and down projection: [batch, d1] -> [batch, d0].
template <typename T>
Var<T> project_user(const BoundModel<T>& model, Var<T> user_rep);

// Dot products against item rows 1..num_items: [batch, num_items]. Column j
// scores item j + 1; the padding item is never scored.
template <typename T>
Var<T> score_items(const BoundModel<T>& model, Var<T> user_rep);

// score_items on vectors already in the item space ([batch, d0]).
template <typename T>
Var<T> score_projected(const BoundModel<T>& model, Var<T> projected);

// Full-catalogue scores for a batch at the given layer, without gradients.
template <typename T>
Tensor<T> infer_scores(const DecoderWeights<T>& weights, const SequenceView& input,
                       std::int64_t layer);

}  // namespace slmrec::model
