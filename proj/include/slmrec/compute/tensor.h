// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "slmrec/common/errors.h"

namespace slmrec {

using Shape = std::vector<std::int64_t>;

enum class DType { kFloat32, kFloat64 };

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "tensors hold float or double");
  return std::is_same_v<T, float> ? DType::kFloat32 : DType::kFloat64;
}

inline const char* dtype_tag(DType dtype) {
  return dtype == DType::kFloat32 ? "f32" : "f64";
}

inline std::int64_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// 64-byte aligned storage so vectorised reductions take the same code path
// regardless of where the allocator placed the buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

// Dense row-major array. Every tensor is at least rank 1; a scalar is
// shape {1}.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)),
        data_(static_cast<std::size_t>(checked_numel(shape_)), fill) {}

  using Storage = std::vector<T, AlignedAllocator<T>>;

  Tensor(Shape shape, const std::vector<T>& values)
      : Tensor(std::move(shape), Storage(values.begin(), values.end())) {}

  Tensor(Shape shape, std::initializer_list<T> values)
      : Tensor(std::move(shape), Storage(values)) {}

  Tensor(Shape shape, Storage values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_numel(shape_) != static_cast<std::int64_t>(data_.size())) {
      throw DimensionError("shape " + shape_string(shape_) + " holds " +
                           std::to_string(shape_numel(shape_)) +
                           " values, got " + std::to_string(data_.size()));
    }
  }

  static Tensor scalar(T value) { return Tensor(Shape{1}, Storage{value}); }

  static constexpr DType dtype() { return dtype_of<T>(); }

  const Shape& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(std::int64_t axis) const {
    if (axis < 0) {
      axis += rank();
    }
    return shape_.at(static_cast<std::size_t>(axis));
  }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  // 2-D view: all leading dimensions flattened into rows.
  std::int64_t cols() const { return shape_.empty() ? 0 : shape_.back(); }
  std::int64_t rows() const { return cols() == 0 ? 0 : numel() / cols(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  Storage& storage() { return data_; }
  const Storage& storage() const { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const {
    return data_[static_cast<std::size_t>(i)];
  }
  T& at(std::int64_t r, std::int64_t c) {
    return data_[static_cast<std::size_t>(r * cols() + c)];
  }
  const T& at(std::int64_t r, std::int64_t c) const {
    return data_[static_cast<std::size_t>(r * cols() + c)];
  }
  T item() const {
    if (numel() != 1) {
      throw DimensionError("item() on tensor of shape " + shape_string(shape_));
    }
    return data_[0];
  }

  std::span<T> row(std::int64_t r) {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(r * cols()),
                                       static_cast<std::size_t>(cols()));
  }
  std::span<const T> row(std::int64_t r) const {
    return std::span<const T>(data_).subspan(
        static_cast<std::size_t>(r * cols()), static_cast<std::size_t>(cols()));
  }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(v)) {
        return false;
      }
    }
    return true;
  }

  Tensor reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_,
                     typename Tensor<U>::Storage(data_.begin(), data_.end()));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  static std::int64_t checked_numel(const Shape& shape) {
    for (std::int64_t d : shape) {
      if (d < 0) {
        throw DimensionError("negative extent in shape " + shape_string(shape));
      }
    }
    return shape_numel(shape);
  }

  Shape shape_;
  Storage data_;
};

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) {
      out += "x";
    }
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

}  // namespace slmrec
