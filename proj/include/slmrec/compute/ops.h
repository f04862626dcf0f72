// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "slmrec/compute/graph.h"
#include "slmrec/compute/kernels.h"

// Differentiable primitives. Each records one node on the graph of its
// first operand and registers the matching reverse-mode rule.
namespace slmrec::ops {

// a: rows x k (leading dims flattened), b: k x n (or n x k with trans_b).
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b, bool trans_b = false);

// a: [G, m, k], b: [G, k, n] (or [G, n, k] with trans_b) -> [G, m, n].
template <typename T>
Var<T> batched_matmul(Var<T> a, Var<T> b, bool trans_b = false);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T factor);
template <typename T>
Var<T> add_scalar(Var<T> a, T offset);
template <typename T>
Var<T> silu(Var<T> a);

template <typename T>
Var<T> softmax_rows(Var<T> x);

// allowed has one flag per element of x and must stay alive with the graph.
template <typename T>
Var<T> masked_softmax_rows(Var<T> x,
                           std::shared_ptr<const std::vector<std::uint8_t>> allowed);

template <typename T>
Var<T> rms_norm(Var<T> x, Var<T> gain, double eps = kernels::kRmsNormEps);

template <typename T>
Var<T> rope_apply(Var<T> x, std::vector<std::int64_t> positions,
                  double base = kernels::kRopeBase);

// [batch*seq, heads*head_dim] -> [batch*heads, seq, head_dim] and back.
template <typename T>
Var<T> split_heads(Var<T> x, std::int64_t batch, std::int64_t seq,
                   std::int64_t heads);
template <typename T>
Var<T> merge_heads(Var<T> x, std::int64_t batch, std::int64_t heads);

// Row lookup; rows equal to pad_id receive no gradient.
template <typename T>
Var<T> embedding(Var<T> table, std::span<const std::int32_t> ids,
                 std::int32_t pad_id = 0);

// prefix [P, d] placed in front of every block of x [batch*T, d].
template <typename T>
Var<T> prepend_rows(Var<T> prefix, Var<T> x, std::int64_t batch);

template <typename T>
Var<T> gather_rows(Var<T> x, std::vector<std::int64_t> rows);

template <typename T>
Var<T> slice_rows(Var<T> x, std::int64_t begin, std::int64_t end);

// Mean over rows of -log softmax(scores)[label].
template <typename T>
Var<T> cross_entropy(Var<T> scores, std::span<const std::int32_t> labels);

// Cosine similarity of matching rows; a row pair containing a zero vector
// yields 0 and increments *zero_pairs when given.
template <typename T>
Var<T> row_cosine(Var<T> a, Var<T> b, int* zero_pairs = nullptr);

// Squared Euclidean distance of matching rows.
template <typename T>
Var<T> row_squared_distance(Var<T> a, Var<T> b);

template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);

// Copy of x's value with no gradient path back to x.
template <typename T>
Var<T> detach(Var<T> x);

}  // namespace slmrec::ops
