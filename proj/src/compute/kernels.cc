// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/compute/kernels.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace slmrec::kernels {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

}  // namespace

template <typename T>
void gemm(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
          std::int64_t n, bool trans_a, bool trans_b, bool accumulate) {
  // Stored shapes: a is m x k (or k x m when trans_a), b is k x n (or n x k).
  ConstMap<T> am(a, trans_a ? k : m, trans_a ? m : k);
  ConstMap<T> bm(b, trans_b ? n : k, trans_b ? k : n);
  MutMap<T> cm(c, m, n);
  if (!accumulate) {
    cm.setZero();
  }
  if (trans_a && trans_b) {
    cm.noalias() += am.transpose() * bm.transpose();
  } else if (trans_a) {
    cm.noalias() += am.transpose() * bm;
  } else if (trans_b) {
    cm.noalias() += am * bm.transpose();
  } else {
    cm.noalias() += am * bm;
  }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_b) {
  if (b.rank() != 2) {
    throw DimensionError("matmul right operand must be 2-D, got " +
                         shape_string(b.shape()));
  }
  const std::int64_t k = a.cols();
  const std::int64_t bk = trans_b ? b.dim(1) : b.dim(0);
  const std::int64_t n = trans_b ? b.dim(0) : b.dim(1);
  if (k != bk) {
    throw DimensionError("matmul inner extents differ: " +
                         shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + (trans_b ? "^T" : ""));
  }
  Shape out_shape = a.shape();
  out_shape.back() = n;
  Tensor<T> out(out_shape);
  gemm(a.data(), b.data(), out.data(), a.rows(), k, n, false, trans_b, false);
  return out;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const std::int64_t n = x.cols();
  for (std::int64_t r = 0; r < x.rows(); ++r) {
    const T* in = x.data() + r * n;
    T* o = out.data() + r * n;
    T max_v = *std::max_element(in, in + n);
    Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> ov(o, n);
    ov = (Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(in, n) - max_v).exp();
    ov /= ov.sum();
  }
  return out;
}

template <typename T>
Tensor<T> masked_softmax_rows(const Tensor<T>& x,
                              std::span<const std::uint8_t> allowed) {
  if (static_cast<std::int64_t>(allowed.size()) != x.numel()) {
    throw DimensionError("softmax mask size mismatch");
  }
  Tensor<T> out(x.shape());
  const std::int64_t n = x.cols();
  for (std::int64_t r = 0; r < x.rows(); ++r) {
    const T* in = x.data() + r * n;
    const std::uint8_t* ok = allowed.data() + r * n;
    T* o = out.data() + r * n;
    T max_v = -std::numeric_limits<T>::infinity();
    for (std::int64_t j = 0; j < n; ++j) {
      if (ok[j]) {
        max_v = std::max(max_v, in[j]);
      }
    }
    if (!std::isfinite(max_v)) {
      continue;  // nothing allowed in this row
    }
    for (std::int64_t j = 0; j < n; ++j) {
      o[j] = ok[j] ? in[j] - max_v : -std::numeric_limits<T>::infinity();
    }
    Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> ov(o, n);
    ov = ov.exp();
    ov /= ov.sum();
  }
  return out;
}

template <typename T>
Tensor<T> rope_apply(const Tensor<T>& x, std::span<const std::int64_t> positions,
                     bool inverse, double base) {
  const std::int64_t d = x.cols();
  if (d % 2 != 0) {
    throw DimensionError("rotary encoding needs an even width, got " +
                         std::to_string(d));
  }
  if (static_cast<std::int64_t>(positions.size()) != x.rows()) {
    throw DimensionError("rotary encoding got " +
                         std::to_string(positions.size()) + " positions for " +
                         std::to_string(x.rows()) + " rows");
  }
  const std::int64_t half = d / 2;
  std::vector<double> theta(static_cast<std::size_t>(half));
  for (std::int64_t j = 0; j < half; ++j) {
    theta[j] = std::pow(base, -2.0 * static_cast<double>(j) / static_cast<double>(d));
  }
  // Angles depend only on (position, pair), so they are tabulated once per
  // distinct position.
  const double sign = inverse ? -1.0 : 1.0;
  std::int64_t max_pos = 0;
  for (std::int64_t p : positions) {
    if (p < 0) {
      throw DimensionError("negative rotary position " + std::to_string(p));
    }
    max_pos = std::max(max_pos, p);
  }
  std::vector<T> cos_tab(static_cast<std::size_t>((max_pos + 1) * half));
  std::vector<T> sin_tab(cos_tab.size());
  for (std::int64_t p = 0; p <= max_pos; ++p) {
    for (std::int64_t j = 0; j < half; ++j) {
      const double angle = sign * static_cast<double>(p) * theta[j];
      cos_tab[p * half + j] = static_cast<T>(std::cos(angle));
      sin_tab[p * half + j] = static_cast<T>(std::sin(angle));
    }
  }
  Tensor<T> out(x.shape());
  for (std::int64_t r = 0; r < x.rows(); ++r) {
    const T* in = x.data() + r * d;
    T* o = out.data() + r * d;
    const T* cr = cos_tab.data() + positions[r] * half;
    const T* sr = sin_tab.data() + positions[r] * half;
    for (std::int64_t j = 0; j < half; ++j) {
      const T x0 = in[2 * j];
      const T x1 = in[2 * j + 1];
      o[2 * j] = x0 * cr[j] - x1 * sr[j];
      o[2 * j + 1] = x0 * sr[j] + x1 * cr[j];
    }
  }
  return out;
}

template <typename T>
Tensor<T> rms_norm(const Tensor<T>& x, const Tensor<T>& gain, double eps) {
  const std::int64_t d = x.cols();
  if (d < 1 || gain.numel() != d) {
    throw DimensionError("rms_norm gain of size " + std::to_string(gain.numel()) +
                         " for width " + std::to_string(d));
  }
  Tensor<T> out(x.shape());
  for (std::int64_t r = 0; r < x.rows(); ++r) {
    const T* in = x.data() + r * d;
    T* o = out.data() + r * d;
    T sq = 0;
    for (std::int64_t j = 0; j < d; ++j) {
      sq += in[j] * in[j];
    }
    const T inv = T(1) / std::sqrt(sq / static_cast<T>(d) + static_cast<T>(eps));
    for (std::int64_t j = 0; j < d; ++j) {
      o[j] = in[j] * inv * gain[j];
    }
  }
  return out;
}

#define SLMREC_INSTANTIATE(T)                                                  \
  template void gemm<T>(const T*, const T*, T*, std::int64_t, std::int64_t,    \
                        std::int64_t, bool, bool, bool);                       \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&, bool);      \
  template Tensor<T> softmax_rows<T>(const Tensor<T>&);                        \
  template Tensor<T> masked_softmax_rows<T>(const Tensor<T>&,                  \
                                            std::span<const std::uint8_t>);    \
  template Tensor<T> rope_apply<T>(const Tensor<T>&,                           \
                                   std::span<const std::int64_t>, bool,        \
                                   double);                                    \
  template Tensor<T> rms_norm<T>(const Tensor<T>&, const Tensor<T>&, double);

SLMREC_INSTANTIATE(float)
SLMREC_INSTANTIATE(double)
#undef SLMREC_INSTANTIATE

}  // namespace slmrec::kernels
