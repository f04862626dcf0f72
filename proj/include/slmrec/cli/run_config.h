// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slmrec/data/split.h"
#include "slmrec/data/synthetic.h"
#include "slmrec/distill/distill.h"
#include "slmrec/eval/evaluate.h"
#include "slmrec/model/config.h"
#include "slmrec/model/pretrain.h"
#include "slmrec/model/trainer.h"
#include "slmrec/prune/sweep.h"

namespace slmrec::cli {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Flat run configuration. Every field has a dotted key (see keys()); values
// round-trip through their text form.
struct RunConfig {
  std::string profile = "default";
  std::uint64_t seed = 1;
  std::string work_dir = "runs";

  // data
  std::string data_input;  // interaction TSV; empty selects the generator
  std::string data_synthetic = "users=2000 items=500";
  double positive_threshold = 3.0;
  std::int64_t min_actions = 5;

  // item-embedding pretraining
  std::int64_t embed_dim = 64;
  std::int64_t embed_layers = 2;
  std::int64_t embed_heads = 2;
  std::int64_t embed_steps = 600;
  std::int64_t embed_batch = 64;
  double embed_lr = 1e-3;

  // decoder shapes
  std::int64_t hidden = 256;
  std::int64_t heads = 4;
  std::int64_t prefix_len = 4;
  std::int64_t seq_len = 50;
  std::int64_t ffn_dim = 0;
  std::int64_t teacher_layers = 8;
  std::int64_t student_layers = 4;

  // optimisation
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double max_grad_norm = 1.0;
  std::string schedule = "cosine";
  std::int64_t warmup_steps = 50;
  std::int64_t max_steps = 1500;
  std::int64_t student_max_steps = 0;  // 0: same as max_steps
  std::int64_t epochs = 1;
  std::int64_t batch_size = 32;
  std::int64_t eval_every = 50;
  std::int64_t log_every = 1;

  // distillation
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double lambda3 = 1.0;
  std::int64_t blocks = 4;
  std::string kd_mode = "offline";
  bool detach_teacher = true;
  std::string distill_name = "student";

  // evaluation
  std::int64_t negatives = 999;
  std::int64_t eval_batch = 128;

  // layer sweep
  std::vector<std::int64_t> sweep_layers{1, 2, 4, 8};
  std::string sweep_mode = "truncated";

  // propagation checks
  std::int64_t theory_trials = 100;
  double prop1_tolerance = 1e-12;
  double prop2_tolerance = 1e-9;

  static const std::vector<std::string>& keys();
  static const std::vector<std::string>& profiles();

  // Throws ConfigError on an unknown key or unparsable value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  KeyValues to_pairs() const;

  // Resets every field, then applies the named profile's overrides.
  static RunConfig from_profile(const std::string& name);

  // fnv1a64 of the canonical key=value text, excluding the output naming keys
  // (work_dir, distill.name).
  std::string hash() const;

  void validate() const;

  data::SyntheticSpec synthetic_spec() const;
  model::PretrainOptions pretrain_options() const;
  model::ModelConfig teacher_config(std::int64_t num_items) const;
  model::ModelConfig student_config(std::int64_t num_items) const;
  model::TrainOptions train_options(bool student) const;
  distill::DistillConfig distill_config() const;
  eval::EvalOptions eval_options(data::Stage stage) const;
  prune::SweepMode sweep_kind() const;
};

// `key=value` lines; blank lines and lines starting with '#' are skipped.
KeyValues parse_key_values(const std::string& text, const std::string& source);

// Profile (from the pairs, last wins) first, then every pair in order.
RunConfig resolve_config(const KeyValues& pairs);

// File pairs followed by `key=value` overrides.
RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const std::vector<std::string>& overrides);

std::string write_config_text(const RunConfig& config);

}  // namespace slmrec::cli
