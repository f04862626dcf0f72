// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/model/decoder.h"

#include <array>
#include <cmath>
#include <memory>

#include "slmrec/common/errors.h"
#include "slmrec/common/random.h"
#include "slmrec/compute/ops.h"

namespace slmrec::model {
namespace {

constexpr double kInitStd = 0.02;

const char* const kLayerNames[] = {"attn_norm", "wq",     "wk",   "wv",    "wo",
                                   "ffn_norm",  "w_gate", "w_up", "w_down"};

template <typename Layer, typename Fn>
void visit_layer(Layer& layer, const std::string& prefix, bool trainable, Fn&& fn) {
  const std::array<decltype(&layer.wq), 9> fields = {
      &layer.attn_norm, &layer.wq,     &layer.wk,   &layer.wv,    &layer.wo,
      &layer.ffn_norm,  &layer.w_gate, &layer.w_up, &layer.w_down};
  for (std::size_t i = 0; i < 9; ++i) {
    fn(prefix + kLayerNames[i], *fields[i], trainable);
  }
}

template <typename W, typename Fn>
void visit_all(W& w, Fn&& fn) {
  fn("id_embedding", w.id_embedding, !w.config.freeze_embedding);
  fn("up_proj", w.up_proj, true);
  fn("prefix", w.prefix, true);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    visit_layer(w.layers[i], "layers." + std::to_string(i) + ".", true, fn);
  }
  fn("final_norm", w.final_norm, true);
  fn("down_proj", w.down_proj, true);
}

template <typename T>
Tensor<T> normal_tensor(Shape shape, std::uint64_t seed, const std::string& name) {
  Rng rng(derive_seed(seed, name));
  Tensor<T> t(std::move(shape));
  for (T& v : t.values()) {
    v = static_cast<T>(rng.truncated_normal(kInitStd));
  }
  return t;
}

}  // namespace

template <typename T>
void DecoderWeights<T>::visit(
    const std::function<void(const std::string&, Tensor<T>&, bool)>& fn) {
  visit_all(*this, fn);
}

template <typename T>
void DecoderWeights<T>::visit(
    const std::function<void(const std::string&, const Tensor<T>&, bool)>& fn)
    const {
  visit_all(*this, fn);
}

template <typename T>
std::int64_t DecoderWeights<T>::parameter_count(bool trainable_only) const {
  std::int64_t total = 0;
  visit([&](const std::string&, const Tensor<T>& t, bool trainable) {
    if (trainable || !trainable_only) {
      total += t.numel();
    }
  });
  return total;
}

template <typename T>
template <typename U>
DecoderWeights<U> DecoderWeights<T>::cast() const {
  DecoderWeights<U> out;
  out.config = config;
  out.id_embedding = id_embedding.template cast<U>();
  out.up_proj = up_proj.template cast<U>();
  out.prefix = prefix.template cast<U>();
  out.final_norm = final_norm.template cast<U>();
  out.down_proj = down_proj.template cast<U>();
  for (const LayerWeights<T>& l : layers) {
    out.layers.push_back({l.attn_norm.template cast<U>(), l.wq.template cast<U>(),
                          l.wk.template cast<U>(), l.wv.template cast<U>(),
                          l.wo.template cast<U>(), l.ffn_norm.template cast<U>(),
                          l.w_gate.template cast<U>(), l.w_up.template cast<U>(),
                          l.w_down.template cast<U>()});
  }
  return out;
}

template <typename T>
DecoderWeights<T> init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::int64_t d0 = config.id_dim;
  const std::int64_t d1 = config.hidden;
  const std::int64_t dff = config.resolved_ffn_dim();
  DecoderWeights<T> w;
  w.config = config;
  w.id_embedding = normal_tensor<T>({config.vocab(), d0}, seed, "id_embedding");
  for (T& v : w.id_embedding.row(0)) {
    v = T(0);
  }
  w.up_proj = normal_tensor<T>({d0, d1}, seed, "up_proj");
  w.prefix = normal_tensor<T>({config.prefix_len, d1}, seed, "prefix");
  for (std::int64_t i = 0; i < config.layers; ++i) {
    const std::string p = "layers." + std::to_string(i) + ".";
    LayerWeights<T> l;
    l.attn_norm = Tensor<T>({d1}, T(1));
    l.wq = normal_tensor<T>({d1, d1}, seed, p + "wq");
    l.wk = normal_tensor<T>({d1, d1}, seed, p + "wk");
    l.wv = normal_tensor<T>({d1, d1}, seed, p + "wv");
    l.wo = normal_tensor<T>({d1, d1}, seed, p + "wo");
    l.ffn_norm = Tensor<T>({d1}, T(1));
    l.w_gate = normal_tensor<T>({d1, dff}, seed, p + "w_gate");
    l.w_up = normal_tensor<T>({d1, dff}, seed, p + "w_up");
    l.w_down = normal_tensor<T>({dff, d1}, seed, p + "w_down");
    w.layers.push_back(std::move(l));
  }
  w.final_norm = Tensor<T>({d1}, T(1));
  w.down_proj = normal_tensor<T>({d1, d0}, seed, "down_proj");
  return w;
}

template <typename T>
BoundModel<T> bind_model(Graph<T>& graph, const DecoderWeights<T>& weights,
                         bool trainable) {
  BoundModel<T> m;
  auto bind = [&](const Tensor<T>& t, bool is_trainable) {
    Var<T> v = graph.parameter(t, trainable && is_trainable);
    if (trainable && is_trainable) {
      m.trainable.push_back(v);
    }
    return v;
  };
  m.id_embedding = bind(weights.id_embedding, !weights.config.freeze_embedding);
  m.up_proj = bind(weights.up_proj, true);
  m.prefix = bind(weights.prefix, true);
  for (const LayerWeights<T>& l : weights.layers) {
    typename BoundModel<T>::Layer b;
    b.attn_norm = bind(l.attn_norm, true);
    b.wq = bind(l.wq, true);
    b.wk = bind(l.wk, true);
    b.wv = bind(l.wv, true);
    b.wo = bind(l.wo, true);
    b.ffn_norm = bind(l.ffn_norm, true);
    b.w_gate = bind(l.w_gate, true);
    b.w_up = bind(l.w_up, true);
    b.w_down = bind(l.w_down, true);
    m.layers.push_back(b);
  }
  m.final_norm = bind(weights.final_norm, true);
  m.down_proj = bind(weights.down_proj, true);
  return m;
}

template <typename T>
Var<T> embed_sequence(const BoundModel<T>& model, const ModelConfig& config,
                      const SequenceView& input) {
  if (static_cast<std::int64_t>(input.ids.size()) != input.batch * input.seq_len ||
      input.mask.size() != input.ids.size()) {
    throw DimensionError("sequence view of " + std::to_string(input.ids.size()) +
                         " ids does not match batch " + std::to_string(input.batch) +
                         " x seq_len " + std::to_string(input.seq_len));
  }
  Var<T> ids = ops::embedding(model.id_embedding, input.ids);
  Var<T> up = ops::matmul(ids, model.up_proj);
  if (config.prefix_len == 0) {
    return up;
  }
  return ops::prepend_rows(model.prefix, up, input.batch);
}

template <typename T>
ForwardTrace<T> decoder_forward(const BoundModel<T>& model,
                                const ModelConfig& config, Var<T> embedded,
                                const SequenceView& input, std::int64_t depth) {
  const std::int64_t batch = input.batch;
  const std::int64_t p = config.prefix_len;
  const std::int64_t s = p + input.seq_len;
  const std::int64_t heads = config.heads;
  const std::int64_t hd = config.head_dim();
  const std::int64_t layers = static_cast<std::int64_t>(model.layers.size());
  if (depth < 0) {
    depth = layers;
  }
  if (depth > layers) {
    throw IndexError("depth " + std::to_string(depth) + " exceeds " +
                     std::to_string(layers) + " layers");
  }

  ForwardTrace<T> trace;
  trace.batch = batch;
  trace.positions = s;
  trace.prefix_len = p;
  trace.full_mask.assign(static_cast<std::size_t>(batch * s), 1);
  for (std::int64_t b = 0; b < batch; ++b) {
    std::int64_t last = -1;
    for (std::int64_t t = 0; t < input.seq_len; ++t) {
      const std::uint8_t m = input.mask[b * input.seq_len + t];
      trace.full_mask[b * s + p + t] = m;
      if (m) {
        last = t;
      }
    }
    if (last < 0) {
      throw DataError("sequence " + std::to_string(b) + " has no real item");
    }
    trace.last_rows.push_back(b * s + p + last);
  }

  // Causal plus key-padding mask, shared by every layer and head.
  auto allowed = std::make_shared<std::vector<std::uint8_t>>(
      static_cast<std::size_t>(batch * heads * s * s), 0);
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t h = 0; h < heads; ++h) {
      std::uint8_t* block = allowed->data() + (b * heads + h) * s * s;
      for (std::int64_t i = 0; i < s; ++i) {
        for (std::int64_t j = 0; j <= i; ++j) {
          block[i * s + j] = trace.full_mask[b * s + j];
        }
      }
    }
  }
  std::shared_ptr<const std::vector<std::uint8_t>> mask_ptr = allowed;

  std::vector<std::int64_t> rope_positions(static_cast<std::size_t>(batch * heads * s));
  for (std::size_t r = 0; r < rope_positions.size(); ++r) {
    rope_positions[r] = static_cast<std::int64_t>(r) % s;
  }
  const T attn_scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));

  Var<T> h = embedded;
  trace.hidden.push_back(h);
  for (std::int64_t k = 0; k < depth; ++k) {
    const auto& l = model.layers[static_cast<std::size_t>(k)];
    Var<T> x = ops::rms_norm(h, l.attn_norm);
    Var<T> q = ops::split_heads(ops::matmul(x, l.wq), batch, s, heads);
    Var<T> kk = ops::split_heads(ops::matmul(x, l.wk), batch, s, heads);
    Var<T> v = ops::split_heads(ops::matmul(x, l.wv), batch, s, heads);
    q = ops::rope_apply(q, rope_positions);
    kk = ops::rope_apply(kk, rope_positions);
    Var<T> logits = ops::scale(ops::batched_matmul(q, kk, true), attn_scale);
    Var<T> attn = ops::masked_softmax_rows(logits, mask_ptr);
    Var<T> ctx = ops::merge_heads(ops::batched_matmul(attn, v), batch, heads);
    h = ops::add(h, ops::matmul(ctx, l.wo));

    Var<T> y = ops::rms_norm(h, l.ffn_norm);
    Var<T> gate = ops::silu(ops::matmul(y, l.w_gate));
    Var<T> up = ops::matmul(y, l.w_up);
    h = ops::add(h, ops::matmul(ops::mul(gate, up), l.w_down));
    trace.hidden.push_back(h);
  }
  return trace;
}

template <typename T>
ForwardTrace<T> forward(const BoundModel<T>& model, const ModelConfig& config,
                        const SequenceView& input, std::int64_t depth) {
  return decoder_forward(model, config, embed_sequence(model, config, input), input,
                         depth);
}

template <typename T>
Var<T> user_representation(const ForwardTrace<T>& trace, std::int64_t layer) {
  if (layer < 0 || layer >= static_cast<std::int64_t>(trace.hidden.size())) {
    throw IndexError("layer " + std::to_string(layer) + " not in trace of " +
                     std::to_string(trace.hidden.size() - 1) + " layers");
  }
  return ops::gather_rows(trace.hidden[static_cast<std::size_t>(layer)],
                          trace.last_rows);
}

template <typename T>
Var<T> project_user(const BoundModel<T>& model, Var<T> user_rep) {
  return ops::matmul(ops::rms_norm(user_rep, model.final_norm), model.down_proj);
}

template <typename T>
Var<T> score_projected(const BoundModel<T>& model, Var<T> projected) {
  const std::int64_t vocab = model.id_embedding.value().rows();
  Var<T> items = ops::slice_rows(model.id_embedding, 1, vocab);
  return ops::matmul(projected, items, true);
}

template <typename T>
Var<T> score_items(const BoundModel<T>& model, Var<T> user_rep) {
  return score_projected(model, project_user(model, user_rep));
}

template <typename T>
Tensor<T> infer_scores(const DecoderWeights<T>& weights, const SequenceView& input,
                       std::int64_t layer) {
  Graph<T> graph;
  graph.set_grad_enabled(false);
  BoundModel<T> model = bind_model(graph, weights, false);
  ForwardTrace<T> trace = forward(model, weights.config, input, layer);
  return score_items(model, user_representation(trace, layer)).value();
}

#define SLMREC_INSTANTIATE(T)                                                    \
  template struct DecoderWeights<T>;                                             \
  template DecoderWeights<T> init_model<T>(const ModelConfig&, std::uint64_t);   \
  template BoundModel<T> bind_model<T>(Graph<T>&, const DecoderWeights<T>&,      \
                                       bool);                                    \
  template Var<T> embed_sequence<T>(const BoundModel<T>&, const ModelConfig&,    \
                                    const SequenceView&);                        \
  template ForwardTrace<T> decoder_forward<T>(const BoundModel<T>&,              \
                                              const ModelConfig&, Var<T>,        \
                                              const SequenceView&, std::int64_t); \
  template ForwardTrace<T> forward<T>(const BoundModel<T>&, const ModelConfig&,  \
                                      const SequenceView&, std::int64_t);        \
  template Var<T> user_representation<T>(const ForwardTrace<T>&, std::int64_t);  \
  template Var<T> project_user<T>(const BoundModel<T>&, Var<T>);                 \
  template Var<T> score_projected<T>(const BoundModel<T>&, Var<T>);              \
  template Var<T> score_items<T>(const BoundModel<T>&, Var<T>);                  \
  template Tensor<T> infer_scores<T>(const DecoderWeights<T>&,                   \
                                     const SequenceView&, std::int64_t);

SLMREC_INSTANTIATE(float)
SLMREC_INSTANTIATE(double)
#undef SLMREC_INSTANTIATE

template DecoderWeights<double> DecoderWeights<float>::cast<double>() const;
template DecoderWeights<float> DecoderWeights<double>::cast<float>() const;
template DecoderWeights<float> DecoderWeights<float>::cast<float>() const;
template DecoderWeights<double> DecoderWeights<double>::cast<double>() const;

}  // namespace slmrec::model
