// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/distill/losses.h"

#include <string>

#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"
#include "slmrec/compute/ops.h"

namespace slmrec::distill {
namespace {

template <typename T>
void require_pairs(const char* what, std::span<const Var<T>> teacher,
                   std::span<const Var<T>> student) {
  if (teacher.empty() || teacher.size() != student.size()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(teacher.size()) +
                         " teacher taps vs " + std::to_string(student.size()) +
                         " student taps");
  }
}

template <typename T>
Var<T> mean_of(const std::vector<Var<T>>& parts) {
  Var<T> acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    acc = ops::add(acc, parts[i]);
  }
  return ops::scale(acc, static_cast<T>(1.0 / static_cast<double>(parts.size())));
}

}  // namespace

template <typename T>
Var<T> d_cos(std::span<const Var<T>> teacher, std::span<const Var<T>> student) {
  require_pairs("d_cos", teacher, student);
  std::vector<Var<T>> per_block;
  int zero_pairs = 0;
  for (std::size_t k = 0; k < teacher.size(); ++k) {
    per_block.push_back(ops::mean(ops::row_cosine(teacher[k], student[k], &zero_pairs)));
  }
  if (zero_pairs > 0) {
    log_warn("d_cos: {} feature pair(s) with a zero vector counted as cosine 0",
             zero_pairs);
  }
  return mean_of(per_block);
}

template <typename T>
Var<T> d_norm(std::span<const Var<T>> teacher, std::span<const Var<T>> student) {
  require_pairs("d_norm", teacher, student);
  std::vector<Var<T>> per_block;
  for (std::size_t k = 0; k < teacher.size(); ++k) {
    per_block.push_back(ops::mean(ops::row_squared_distance(teacher[k], student[k])));
  }
  return mean_of(per_block);
}

template <typename T>
Var<T> l_ms(std::span<const Var<T>> student, std::span<const Var<T>> adapters,
            Var<T> id_embedding, std::span<const std::int32_t> label_columns) {
  if (student.size() < 2) {
    log_warn("multi-supervision loss needs at least 2 blocks; using 0");
    return id_embedding.graph->constant(Tensor<T>::scalar(T(0)));
  }
  if (adapters.size() != student.size() - 1) {
    throw DimensionError("l_ms: " + std::to_string(adapters.size()) +
                         " adapters for " + std::to_string(student.size()) + " blocks");
  }
  const std::int64_t vocab = id_embedding.value().rows();
  Var<T> items = ops::slice_rows(id_embedding, 1, vocab);
  std::vector<Var<T>> per_block;
  for (std::size_t k = 0; k + 1 < student.size(); ++k) {
    Var<T> reduced = ops::matmul(student[k], adapters[k]);
    Var<T> scores = ops::matmul(reduced, items, true);
    per_block.push_back(ops::cross_entropy(scores, label_columns));
  }
  return mean_of(per_block);
}

template <typename T>
LossTerms<T> total_loss(Var<T> ce, std::span<const Var<T>> teacher,
                        std::span<const Var<T>> student,
                        std::span<const Var<T>> adapters, Var<T> id_embedding,
                        std::span<const std::int32_t> label_columns,
                        const LossWeights& weights) {
  if (weights.lambda1 < 0 || weights.lambda2 < 0 || weights.lambda3 < 0) {
    throw ConfigError("loss weights must be nonnegative");
  }
  LossTerms<T> out;
  out.total = ce;
  out.ce = ce.value().item();
  if (weights.lambda1 != 0) {
    Var<T> term = ops::add_scalar(ops::scale(d_cos(teacher, student), T(-1)), T(1));
    out.one_minus_cos = term.value().item();
    out.total = ops::add(out.total, ops::scale(term, static_cast<T>(weights.lambda1)));
  }
  if (weights.lambda2 != 0) {
    Var<T> term = d_norm(teacher, student);
    out.norm = term.value().item();
    out.total = ops::add(out.total, ops::scale(term, static_cast<T>(weights.lambda2)));
  }
  if (weights.lambda3 != 0) {
    Var<T> term = l_ms(student, adapters, id_embedding, label_columns);
    out.multi_supervision = term.value().item();
    out.total = ops::add(out.total, ops::scale(term, static_cast<T>(weights.lambda3)));
  }
  out.total_value = out.total.value().item();
  return out;
}

#define SLMREC_INSTANTIATE(T)                                                      \
  template Var<T> d_cos<T>(std::span<const Var<T>>, std::span<const Var<T>>);     \
  template Var<T> d_norm<T>(std::span<const Var<T>>, std::span<const Var<T>>);    \
  template Var<T> l_ms<T>(std::span<const Var<T>>, std::span<const Var<T>>, Var<T>, \
                          std::span<const std::int32_t>);                          \
  template LossTerms<T> total_loss<T>(Var<T>, std::span<const Var<T>>,             \
                                      std::span<const Var<T>>,                     \
                                      std::span<const Var<T>>, Var<T>,             \
                                      std::span<const std::int32_t>,               \
                                      const LossWeights&);

SLMREC_INSTANTIATE(float)
SLMREC_INSTANTIATE(double)
#undef SLMREC_INSTANTIATE

}  // namespace slmrec::distill
