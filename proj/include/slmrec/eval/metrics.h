// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slmrec::eval {

struct RankedList {
  std::vector<std::int64_t> order;  // candidate indices, best first
  std::int64_t positive_rank = 0;   // 1-based
};

// Descending sort with the positive placed after every candidate that ties
// with it. Throws EvaluationError on a non-finite score.
RankedList rank_candidates(std::span<const float> scores, std::size_t positive_index);

// 1-based rank of candidates[0] (the positive) among all candidates. Ties
// are resolved pessimistically: every other candidate scoring at least as
// high as the positive is ranked above it.
std::int64_t rank_of_positive(std::span<const float> candidate_scores);

double hr_at_k(std::int64_t rank, std::int64_t k);
// 1 / log2(rank + 1) when rank <= k, else 0.
double ndcg_at_k(std::int64_t rank, std::int64_t k);
double reciprocal_rank(std::int64_t rank);

// Running means of the reported metrics over users.
struct MetricAccumulator {
  std::int64_t users = 0;
  double hr1 = 0, hr5 = 0, hr10 = 0, ndcg5 = 0, ndcg10 = 0, mrr = 0;
  double mrr_sq = 0;

  void add(std::int64_t rank);
};

struct MetricsReport {
  double hr1 = 0, hr5 = 0, hr10 = 0, ndcg5 = 0, ndcg10 = 0, mrr = 0;
  double mrr_stderr = 0;  // standard error of the mean reciprocal rank
  std::int64_t users = 0;
  std::int64_t negatives = 0;
  std::int64_t layer = 0;
  std::string stage;
  std::uint64_t seed = 0;
  std::string config_hash;

  static MetricsReport from(const MetricAccumulator& acc);

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  std::string to_table() const;
};

}  // namespace slmrec::eval
