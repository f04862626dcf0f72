// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace slmrec::testing {

// Sort-then-scan reimplementation of the ranking metrics. Candidate 0 is
// the positive and loses every tie.
struct OracleMetrics {
  double hr1 = 0, hr5 = 0, hr10 = 0, ndcg5 = 0, ndcg10 = 0, mrr = 0;
};

inline std::int64_t oracle_rank(const std::vector<float>& scores) {
  std::vector<std::pair<float, int>> v;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    v.emplace_back(scores[i], i == 0 ? 1 : 0);
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::int64_t r = 0;
  while (v[static_cast<std::size_t>(r)].second != 1) {
    ++r;
  }
  return r + 1;
}

inline OracleMetrics oracle_metrics(const std::vector<std::vector<float>>& lists) {
  OracleMetrics o;
  for (const auto& s : lists) {
    const double rank = static_cast<double>(oracle_rank(s));
    const double gain = 1.0 / std::log2(rank + 1.0);
    o.hr1 += rank <= 1 ? 1.0 : 0.0;
    o.hr5 += rank <= 5 ? 1.0 : 0.0;
    o.hr10 += rank <= 10 ? 1.0 : 0.0;
    o.ndcg5 += rank <= 5 ? gain : 0.0;
    o.ndcg10 += rank <= 10 ? gain : 0.0;
    o.mrr += 1.0 / rank;
  }
  const double n = static_cast<double>(lists.size());
  o.hr1 /= n;
  o.hr5 /= n;
  o.hr10 /= n;
  o.ndcg5 /= n;
  o.ndcg10 /= n;
  o.mrr /= n;
  return o;
}

// Mean and standard deviation of 1/r for r uniform on 1..n.
inline std::pair<double, double> uniform_rank_mrr(int n) {
  double m1 = 0, m2 = 0;
  for (int r = 1; r <= n; ++r) {
    m1 += 1.0 / r;
    m2 += 1.0 / (static_cast<double>(r) * r);
  }
  m1 /= n;
  m2 /= n;
  return {m1, std::sqrt(m2 - m1 * m1)};
}

}  // namespace slmrec::testing
