// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "slmrec/compute/graph.h"

namespace slmrec::distill {

// Each tap is the [batch, d1] user representation of one tap layer.
//
// Mean over blocks and users of cos(h_t, h_s). A pair with a zero vector
// counts as cosine 0 and triggers a warning.
template <typename T>
Var<T> d_cos(std::span<const Var<T>> teacher, std::span<const Var<T>> student);

// Mean over blocks and users of ||h_t - h_s||^2.
template <typename T>
Var<T> d_norm(std::span<const Var<T>> teacher, std::span<const Var<T>> student);

// Cross-entropy of the item scores obtained from each non-final student tap
// through its adapter, averaged over the B - 1 blocks. adapters[k] is the
// d1 x d0 map of block k + 1. With one block the result is a constant 0
// and a warning is logged.
template <typename T>
Var<T> l_ms(std::span<const Var<T>> student, std::span<const Var<T>> adapters,
            Var<T> id_embedding, std::span<const std::int32_t> label_columns);

struct LossWeights {
  double lambda1 = 1.0;  // weight of (1 - d_cos)
  double lambda2 = 0.1;  // weight of d_norm
  double lambda3 = 1.0;  // weight of l_ms

  bool any_active() const { return lambda1 != 0 || lambda2 != 0 || lambda3 != 0; }
};

template <typename T>
struct LossTerms {
  Var<T> total;
  double ce = 0.0;
  // Components that were computed (those with a nonzero weight).
  std::optional<double> one_minus_cos, norm, multi_supervision;
  double total_value = 0.0;
};

// ce + lambda1 (1 - d_cos) + lambda2 d_norm + lambda3 l_ms. Terms whose weight
// is zero are not built at all, so with all weights zero the total is the
// ce node itself.
template <typename T>
LossTerms<T> total_loss(Var<T> ce, std::span<const Var<T>> teacher,
                        std::span<const Var<T>> student,
                        std::span<const Var<T>> adapters, Var<T> id_embedding,
                        std::span<const std::int32_t> label_columns,
                        const LossWeights& weights);

}  // namespace slmrec::distill
