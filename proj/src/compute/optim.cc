// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/compute/optim.h"

#include <algorithm>
#include <cmath>

namespace slmrec {

double LrSchedule::factor(std::int64_t step) const {
  if (warmup_steps > 0 && step < warmup_steps) {
    return static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (kind == Kind::kConstant) {
    return 1.0;
  }
  const double span =
      static_cast<double>(std::max<std::int64_t>(1, total_steps - warmup_steps));
  const double progress = static_cast<double>(step - warmup_steps) / span;
  return std::max(0.0, 0.5 * (1.0 + std::cos(M_PI * progress)));
}

template <typename T>
void AdamW<T>::add_parameter(std::string name, Tensor<T>* param) {
  names_.push_back(std::move(name));
  params_.push_back(param);
  m_.emplace_back(param->shape());
  v_.emplace_back(param->shape());
}

template <typename T>
OptimizerStepInfo AdamW<T>::step(std::span<const Tensor<T>* const> grads) {
  if (grads.size() != params_.size()) {
    throw TrainingError("optimizer got " + std::to_string(grads.size()) +
                        " gradients for " + std::to_string(params_.size()) +
                        " parameters");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i] == nullptr) {
      continue;
    }
    if (grads[i]->shape() != params_[i]->shape()) {
      throw DimensionError("gradient for " + names_[i] + " has shape " +
                           shape_string(grads[i]->shape()) + ", parameter " +
                           shape_string(params_[i]->shape()));
    }
    for (T g : grads[i]->values()) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient in parameter '" + names_[i] +
                            "' at step " + std::to_string(step_));
      }
      sq += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  OptimizerStepInfo info;
  info.grad_norm = std::sqrt(sq);
  if (config_.max_grad_norm > 0.0 && info.grad_norm > config_.max_grad_norm) {
    info.clip_scale = config_.max_grad_norm / info.grad_norm;
  }
  info.learning_rate = current_learning_rate();
  ++step_;

  const double lr = info.learning_rate;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T decay = static_cast<T>(1.0 - lr * config_.weight_decay);
  const T step_size = static_cast<T>(lr / bias1);
  const T inv_sqrt_bias2 = static_cast<T>(1.0 / std::sqrt(bias2));
  const T eps = static_cast<T>(config_.epsilon);
  const T clip = static_cast<T>(info.clip_scale);

  for (std::size_t i = 0; i < params_.size(); ++i) {
    T* p = params_[i]->data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    const T* g = grads[i] ? grads[i]->data() : nullptr;
    const std::int64_t n = params_[i]->numel();
    for (std::int64_t j = 0; j < n; ++j) {
      const T gj = g ? g[j] * clip : T(0);
      p[j] *= decay;
      m[j] = b1 * m[j] + (T(1) - b1) * gj;
      v[j] = b2 * v[j] + (T(1) - b2) * gj * gj;
      p[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bias2 + eps);
    }
  }
  return info;
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace slmrec
