// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slmrec/common/random.h"
#include "slmrec/compute/graph.h"
#include "slmrec/compute/ops.h"
#include "slmrec/compute/tensor.h"

namespace slmrec::testing {

// Builds a scalar loss from the bound inputs on a fresh graph.
using LossBuilder =
    std::function<Var<double>(Graph<double>& graph, const std::vector<Var<double>>& inputs)>;

struct TensorGradError {
  std::string name;
  double relative = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double max_abs = 0.0;
};

struct GradCheckResult {
  std::vector<TensorGradError> tensors;
  double worst_relative() const {
    double w = 0.0;
    for (const auto& t : tensors) {
      w = std::max(w, t.relative);
    }
    return w;
  }
};

inline Tensor<double> random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.values()) {
    v = scale * rng.normal();
  }
  return t;
}

// Central differences with step h over every element of every input whose
// flag in `check` is set (all when empty). Norms below `floor` are treated
// as absolute errors so all-zero gradients do not divide by zero.
inline GradCheckResult check_gradients(std::vector<Tensor<double>>& inputs,
                                       const std::vector<std::string>& names,
                                       const LossBuilder& build, double h = 1e-5,
                                       std::vector<bool> check = {}, double floor = 1e-8) {
  if (check.empty()) {
    check.assign(inputs.size(), true);
  }
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> graph;
    std::vector<Var<double>> vars;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      vars.push_back(graph.parameter(inputs[i], check[i]));
    }
    const Var<double> loss = build(graph, vars);
    graph.backward(loss);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Tensor<double>* g = graph.grad(vars[i]);
      analytic.push_back(g != nullptr ? *g : Tensor<double>(inputs[i].shape()));
    }
  }
  const auto evaluate = [&]() {
    Graph<double> graph;
    graph.set_grad_enabled(false);
    std::vector<Var<double>> vars;
    for (auto& t : inputs) {
      vars.push_back(graph.parameter(t, false));
    }
    return build(graph, vars).value().item();
  };
  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!check[i]) {
      continue;
    }
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0, max_abs = 0.0;
    for (std::int64_t j = 0; j < inputs[i].numel(); ++j) {
      const double saved = inputs[i][j];
      inputs[i][j] = saved + h;
      const double plus = evaluate();
      inputs[i][j] = saved - h;
      const double minus = evaluate();
      inputs[i][j] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i][j];
      diff_sq += (a - numeric) * (a - numeric);
      a_sq += a * a;
      n_sq += numeric * numeric;
      max_abs = std::max(max_abs, std::fabs(a - numeric));
    }
    const double denom = std::max(std::sqrt(std::max(a_sq, n_sq)), floor);
    result.tensors.push_back(
        {i < names.size() ? names[i] : std::to_string(i), std::sqrt(diff_sq) / denom, max_abs});
  }
  return result;
}

// sum(out * weights) with fixed random weights, so every output element
// contributes to the checked scalar.
inline Var<double> random_projection(Graph<double>& graph, Var<double> out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> w = random_tensor(rng, out.shape());
  return ops::sum(ops::mul(out, graph.constant(std::move(w))));
}

}  // namespace slmrec::testing
