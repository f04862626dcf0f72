// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slmrec/common/random.h"
#include "slmrec/distill/block_map.h"
#include "slmrec/distill/losses.h"
#include "slmrec/model/config.h"
#include "slmrec/model/decoder.h"
#include "support/finite_diff.h"

namespace slmrec::testing {

// L=2, d1=16, T=4, |I|=10 decoder in 64-bit.
inline model::ModelConfig micro_config(std::int64_t layers = 2) {
  model::ModelConfig c;
  c.layers = layers;
  c.hidden = 16;
  c.heads = 2;
  c.id_dim = 8;
  c.prefix_len = 2;
  c.seq_len = 4;
  c.num_items = 10;
  c.freeze_embedding = false;
  return c;
}

// Three left-padded sequences with their next-item labels (as columns).
struct MicroBatch {
  std::vector<std::int32_t> ids{0, 3, 7, 2,  //
                                5, 1, 9, 10,  //
                                0, 0, 4, 4};
  std::vector<std::uint8_t> mask{0, 1, 1, 1,  //
                                 1, 1, 1, 1,  //
                                 0, 0, 1, 1};
  std::vector<std::int32_t> label_columns{5, 0, 8};

  model::SequenceView view() const { return {3, 4, ids, mask}; }
};

// Randomises every tensor (gains around 1) so no gradient is trivially zero.
inline model::DecoderWeights<double> micro_weights(const model::ModelConfig& config,
                                                   std::uint64_t seed) {
  auto w = model::init_model<double>(config, seed);
  Rng rng(derive_seed(seed, "micro_values"));
  w.visit([&](const std::string& name, Tensor<double>& t, bool) {
    const bool gain = name.find("norm") != std::string::npos;
    for (double& v : t.values()) {
      v = gain ? 1.0 + 0.3 * rng.normal() : 0.4 * rng.normal();
    }
  });
  return w;
}

struct MicroKd {
  model::DecoderWeights<double> teacher;
  std::vector<Tensor<double>> adapters;
  distill::BlockMap map;
  distill::LossWeights weights;
};

// Loss of the micro model: cross-entropy alone, or the full distillation
// objective when kd is given. Adapters are bound after the model tensors.
inline Var<double> micro_loss(Graph<double>& graph, const model::DecoderWeights<double>& w,
                              const MicroBatch& batch, const MicroKd* kd,
                              std::vector<Var<double>>* params) {
  model::BoundModel<double> bound = model::bind_model(graph, w, params != nullptr);
  model::ForwardTrace<double> trace = model::forward(bound, w.config, batch.view());
  Var<double> ce = ops::cross_entropy(
      model::score_items(bound, model::user_representation(trace, w.config.layers)),
      std::span<const std::int32_t>(batch.label_columns));
  if (params != nullptr) {
    *params = bound.trainable;
  }
  if (kd == nullptr) {
    return ce;
  }
  model::BoundModel<double> tb = model::bind_model(graph, kd->teacher, false);
  model::ForwardTrace<double> tt = model::forward(tb, kd->teacher.config, batch.view());
  std::vector<Var<double>> teacher_taps, student_taps, adapters;
  for (std::int64_t k : kd->map.teacher_taps) {
    teacher_taps.push_back(ops::detach(model::user_representation(tt, k)));
  }
  for (std::int64_t k : kd->map.student_taps) {
    student_taps.push_back(model::user_representation(trace, k));
  }
  for (const Tensor<double>& a : kd->adapters) {
    adapters.push_back(graph.parameter(a, params != nullptr));
    if (params != nullptr) {
      params->push_back(adapters.back());
    }
  }
  return distill::total_loss<double>(ce, teacher_taps, student_taps, adapters,
                                     bound.id_embedding,
                                     std::span<const std::int32_t>(batch.label_columns),
                                     kd->weights)
      .total;
}

// Central-difference audit of every trainable tensor (and adapter).
inline GradCheckResult check_micro_model(model::DecoderWeights<double>& w, MicroKd* kd,
                                         double h = 1e-5) {
  const MicroBatch batch;
  std::vector<Tensor<double>*> tensors;
  std::vector<std::string> names;
  w.visit([&](const std::string& name, Tensor<double>& t, bool trainable) {
    if (trainable) {
      tensors.push_back(&t);
      names.push_back(name);
    }
  });
  if (kd != nullptr) {
    for (std::size_t k = 0; k < kd->adapters.size(); ++k) {
      tensors.push_back(&kd->adapters[k]);
      names.push_back("adapter." + std::to_string(k + 1));
    }
  }
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> graph;
    std::vector<Var<double>> params;
    const Var<double> loss = micro_loss(graph, w, batch, kd, &params);
    graph.backward(loss);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Tensor<double>* g = graph.grad(params[i]);
      analytic.push_back(g != nullptr ? *g : Tensor<double>(tensors[i]->shape()));
    }
  }
  const auto evaluate = [&]() {
    Graph<double> graph;
    graph.set_grad_enabled(false);
    return micro_loss(graph, w, batch, kd, nullptr).value().item();
  };
  GradCheckResult result;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Tensor<double>& t = *tensors[i];
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0, max_abs = 0.0;
    for (std::int64_t j = 0; j < t.numel(); ++j) {
      const double saved = t[j];
      t[j] = saved + h;
      const double plus = evaluate();
      t[j] = saved - h;
      const double minus = evaluate();
      t[j] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i][j];
      diff_sq += (a - numeric) * (a - numeric);
      a_sq += a * a;
      n_sq += numeric * numeric;
      max_abs = std::max(max_abs, std::fabs(a - numeric));
    }
    const double denom = std::max(std::sqrt(std::max(a_sq, n_sq)), 1e-8);
    result.tensors.push_back({names[i], std::sqrt(diff_sq) / denom, max_abs});
  }
  return result;
}

inline MicroKd micro_kd(std::uint64_t seed) {
  MicroKd kd;
  kd.teacher = micro_weights(micro_config(4), derive_seed(seed, "teacher"));
  kd.map = distill::make_block_map(4, 2, 2);
  Rng rng(derive_seed(seed, "adapters"));
  kd.adapters.push_back(random_tensor(rng, Shape{16, 8}, 0.4));
  return kd;
}

}  // namespace slmrec::testing
