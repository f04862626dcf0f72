// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/model/pretrain.h"

#include <cmath>

#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"
#include "slmrec/common/random.h"
#include "slmrec/compute/ops.h"
#include "slmrec/compute/optim.h"

namespace slmrec::model {

NextItemTargets next_item_targets(const data::Batch& batch) {
  NextItemTargets out;
  const std::int64_t t_len = batch.seq_len;
  for (std::int64_t b = 0; b < batch.size; ++b) {
    for (std::int64_t t = 0; t < t_len; ++t) {
      const std::int64_t row = b * t_len + t;
      if (!batch.mask[row]) {
        continue;
      }
      const std::int32_t next =
          t + 1 < t_len ? batch.ids[row + 1] : batch.labels[b];
      out.rows.push_back(row);
      out.columns.push_back(next - 1);
    }
  }
  return out;
}

ModelConfig pretrain_config(const PretrainOptions& options, std::int64_t num_items) {
  ModelConfig c;
  c.layers = options.layers;
  c.hidden = options.id_dim;
  c.heads = options.heads;
  c.id_dim = options.id_dim;
  c.prefix_len = 0;
  c.seq_len = options.seq_len;
  c.num_items = num_items;
  c.freeze_embedding = false;
  c.validate();
  return c;
}

PretrainResult pretrain_id_embeddings(const data::SplitDataset& split,
                                      const PretrainOptions& options) {
  const ModelConfig config = pretrain_config(options, split.num_items);
  DecoderWeights<float> weights =
      init_model<float>(config, derive_seed(options.seed, "pretrain_init"));
  AdamWConfig optim;
  optim.learning_rate = options.learning_rate;
  AdamW<float> opt(optim, LrSchedule{LrSchedule::Kind::kConstant, 0, options.steps});
  weights.visit([&](const std::string& name, Tensor<float>& t, bool trainable) {
    if (trainable) {
      opt.add_parameter(name, &t);
    }
  });
  data::BatchStream stream(split, options.seq_len, options.batch_size,
                           derive_seed(options.seed, "pretrain_batches"));

  PretrainResult result;
  for (std::int64_t step = 1; step <= options.steps; ++step) {
    const data::Batch& batch = stream.next();
    Graph<float> graph;
    BoundModel<float> model = bind_model(graph, weights);
    ForwardTrace<float> trace = forward(model, config, SequenceView::of(batch));
    const NextItemTargets targets = next_item_targets(batch);
    Var<float> rows = ops::gather_rows(trace.hidden.back(), targets.rows);
    Var<float> loss = ops::cross_entropy(
        score_items(model, rows), std::span<const std::int32_t>(targets.columns));
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
      throw TrainingError("embedding pretraining diverged at step " +
                          std::to_string(step));
    }
    graph.backward(loss);
    std::vector<const Tensor<float>*> grads;
    for (const Var<float>& p : model.trainable) {
      grads.push_back(graph.grad(p));
    }
    opt.step(grads);
    result.losses.push_back(value);
    if (step % 100 == 0) {
      log_info("pretrain step {} loss {:.4f}", step, value);
    }
  }
  // The padding row never receives gradient but weight decay could move it.
  for (float& v : weights.id_embedding.row(0)) {
    v = 0.0f;
  }
  result.item_embedding = weights.id_embedding;
  result.model = std::move(weights);
  return result;
}

}  // namespace slmrec::model
