// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slmrec/compute/tensor.h"

namespace slmrec {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  // Global L2 norm over all gradients; <= 0 disables clipping.
  double max_grad_norm = 1.0;
};

// Learning-rate multiplier as a function of completed steps: linear warmup
// from 0, then either constant or half-cosine decay to 0 at total_steps.
struct LrSchedule {
  enum class Kind { kConstant, kCosine };

  Kind kind = Kind::kCosine;
  std::int64_t warmup_steps = 0;
  std::int64_t total_steps = 1;

  double factor(std::int64_t step) const;
};

struct OptimizerStepInfo {
  double grad_norm = 0.0;  // before clipping
  double clip_scale = 1.0;
  double learning_rate = 0.0;
};

template <typename T>
class AdamW {
 public:
  AdamW(AdamWConfig config, LrSchedule schedule)
      : config_(config), schedule_(schedule) {}

  // The tensor is updated in place by step() and must outlive the optimizer.
  void add_parameter(std::string name, Tensor<T>* param);

  // grads[i] belongs to the i-th added parameter; nullptr means zero.
  OptimizerStepInfo step(std::span<const Tensor<T>* const> grads);

  std::int64_t steps_taken() const { return step_; }
  std::size_t parameter_count() const { return params_.size(); }
  const std::string& parameter_name(std::size_t i) const { return names_[i]; }
  const Tensor<T>& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor<T>& second_moment(std::size_t i) const { return v_[i]; }
  const AdamWConfig& config() const { return config_; }
  const LrSchedule& schedule() const { return schedule_; }
  double current_learning_rate() const {
    return config_.learning_rate * schedule_.factor(step_);
  }

 private:
  AdamWConfig config_;
  LrSchedule schedule_;
  std::int64_t step_ = 0;
  std::vector<std::string> names_;
  std::vector<Tensor<T>*> params_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

}  // namespace slmrec
