// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/model/trainer.h"

#include <chrono>
#include <cmath>

#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"
#include "slmrec/common/random.h"
#include "slmrec/compute/ops.h"
#include "slmrec/model/checkpoint.h"

namespace slmrec::model {

std::int64_t resolve_max_steps(const TrainOptions& options,
                               std::int64_t batches_per_epoch) {
  if (options.max_steps > 0) {
    return options.max_steps;
  }
  if (options.epochs < 1) {
    throw ConfigError("max_steps <= 0 requires epochs >= 1");
  }
  return options.epochs * batches_per_epoch;
}

AdamW<float> make_optimizer(DecoderWeights<float>& weights,
                            const TrainOptions& options, std::int64_t total_steps) {
  AdamW<float> opt(options.optim,
                   LrSchedule{options.schedule, options.warmup_steps, total_steps});
  weights.visit([&](const std::string& name, Tensor<float>& t, bool trainable) {
    if (trainable) {
      opt.add_parameter(name, &t);
    }
  });
  return opt;
}

std::vector<std::int32_t> label_columns(const data::Batch& batch) {
  std::vector<std::int32_t> cols(batch.labels.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    cols[i] = batch.labels[i] - 1;
  }
  return cols;
}

StepRecord train_step(DecoderWeights<float>& weights, AdamW<float>& optimizer,
                      const data::Batch& batch) {
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t step = optimizer.steps_taken() + 1;
  StepRecord rec;
  rec.step = step;
  rec.learning_rate = optimizer.current_learning_rate();
  Graph<float> graph;
  try {
    BoundModel<float> model = bind_model(graph, weights);
    ForwardTrace<float> trace =
        forward(model, weights.config, SequenceView::of(batch));
    const std::int64_t top = static_cast<std::int64_t>(trace.hidden.size()) - 1;
    Var<float> scores = score_items(model, user_representation(trace, top));
    const std::vector<std::int32_t> labels = label_columns(batch);
    Var<float> loss = ops::cross_entropy(scores, std::span<const std::int32_t>(labels));
    rec.loss = loss.value().item();
    graph.backward(loss);
    std::vector<const Tensor<float>*> grads;
    for (const Var<float>& p : model.trainable) {
      grads.push_back(graph.grad(p));
    }
    OptimizerStepInfo info = optimizer.step(grads);
    rec.grad_norm = info.grad_norm;
  } catch (const NumericError& e) {
    throw TrainingError("step " + std::to_string(step) + ": " + e.what());
  }
  if (!std::isfinite(rec.loss)) {
    throw TrainingError("step " + std::to_string(step) + ": non-finite loss");
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

TrainResult fit_supervised(DecoderWeights<float>& weights,
                           const data::SplitDataset& split,
                           const TrainOptions& options, const Validator& validate) {
  const auto start = std::chrono::steady_clock::now();
  data::BatchStream stream(split, weights.config.seq_len, options.batch_size,
                           derive_seed(options.seed, "batches"));
  const std::int64_t total = resolve_max_steps(options, stream.batches_per_epoch());
  AdamW<float> optimizer = make_optimizer(weights, options, total);

  TrainResult result;
  bool have_best = false;
  auto evaluate = [&](std::int64_t step) {
    const double metric = validate(weights, step);
    result.evals.push_back({step, metric});
    log_info("step {} validation {:.5f}", step, metric);
    if (!options.checkpoint_dir.empty()) {
      save_checkpoint(to_checkpoint(weights),
                      options.checkpoint_dir /
                          (options.checkpoint_prefix + std::to_string(step) + ".ckpt"));
    }
    if (!have_best || metric >= result.best_metric) {
      have_best = true;
      result.best_metric = metric;
      result.best_step = step;
      result.best = weights;
    }
  };

  for (std::int64_t step = 1; step <= total; ++step) {
    result.steps.push_back(train_step(weights, optimizer, stream.next()));
    if (options.on_step) {
      options.on_step(result.steps.back());
    }
    if ((options.eval_every > 0 && step % options.eval_every == 0) || step == total) {
      evaluate(step);
    }
  }
  result.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace slmrec::model
