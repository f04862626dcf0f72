// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "slmrec/compute/tensor.h"

// Forward kernels shared by the differentiable ops and by code that works
// on plain tensors (evaluation, the propagation checks).
namespace slmrec::kernels {

inline constexpr double kRopeBase = 10000.0;
inline constexpr double kRmsNormEps = 1e-6;

// c = a * b (or a * b^T). a is viewed as rows x cols.
template <typename T>
void gemm(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
          std::int64_t n, bool trans_a, bool trans_b, bool accumulate);

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_b = false);

// Row-wise softmax with max subtraction.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x);

// Softmax restricted to entries with allowed[i] != 0. Disallowed entries
// get weight 0; a row with nothing allowed becomes all zeros.
template <typename T>
Tensor<T> masked_softmax_rows(const Tensor<T>& x,
                              std::span<const std::uint8_t> allowed);

// Rotates consecutive pairs of each row by position * base^(-2j/d).
// positions[r] is the position of row r. Pass inverse to rotate backwards.
template <typename T>
Tensor<T> rope_apply(const Tensor<T>& x, std::span<const std::int64_t> positions,
                     bool inverse = false, double base = kRopeBase);

template <typename T>
Tensor<T> rms_norm(const Tensor<T>& x, const Tensor<T>& gain,
                   double eps = kRmsNormEps);

}  // namespace slmrec::kernels
