// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/eval/metrics.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "slmrec/common/errors.h"

namespace slmrec::eval {

RankedList rank_candidates(std::span<const float> scores, std::size_t positive_index) {
  if (positive_index >= scores.size()) {
    throw EvaluationError(fmt::format("positive index {} out of {} candidates",
                                      positive_index, scores.size()));
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw EvaluationError(fmt::format("non-finite score at candidate {}", i));
    }
  }
  RankedList out;
  out.order.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.order[i] = static_cast<std::int64_t>(i);
  }
  const auto pos = static_cast<std::int64_t>(positive_index);
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::int64_t a, std::int64_t b) {
    const float sa = scores[static_cast<std::size_t>(a)];
    const float sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) {
      return sa > sb;
    }
    return b == pos && a != pos;
  });
  const auto it = std::find(out.order.begin(), out.order.end(), pos);
  out.positive_rank = (it - out.order.begin()) + 1;
  return out;
}

std::int64_t rank_of_positive(std::span<const float> candidate_scores) {
  if (candidate_scores.empty()) {
    throw EvaluationError("no candidates to rank");
  }
  const float positive = candidate_scores[0];
  if (!std::isfinite(positive)) {
    throw EvaluationError("non-finite positive score");
  }
  std::int64_t rank = 1;
  for (std::size_t i = 1; i < candidate_scores.size(); ++i) {
    if (!(candidate_scores[i] < positive)) {
      ++rank;
    }
  }
  return rank;
}

double hr_at_k(std::int64_t rank, std::int64_t k) { return rank <= k ? 1.0 : 0.0; }

double ndcg_at_k(std::int64_t rank, std::int64_t k) {
  return rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

double reciprocal_rank(std::int64_t rank) { return 1.0 / static_cast<double>(rank); }

void MetricAccumulator::add(std::int64_t rank) {
  ++users;
  hr1 += hr_at_k(rank, 1);
  hr5 += hr_at_k(rank, 5);
  hr10 += hr_at_k(rank, 10);
  ndcg5 += ndcg_at_k(rank, 5);
  ndcg10 += ndcg_at_k(rank, 10);
  const double rr = reciprocal_rank(rank);
  mrr += rr;
  mrr_sq += rr * rr;
}

MetricsReport MetricsReport::from(const MetricAccumulator& acc) {
  MetricsReport r;
  r.users = acc.users;
  if (acc.users == 0) {
    return r;
  }
  const double n = static_cast<double>(acc.users);
  r.hr1 = acc.hr1 / n;
  r.hr5 = acc.hr5 / n;
  r.hr10 = acc.hr10 / n;
  r.ndcg5 = acc.ndcg5 / n;
  r.ndcg10 = acc.ndcg10 / n;
  r.mrr = acc.mrr / n;
  if (acc.users > 1) {
    const double var = (acc.mrr_sq - n * r.mrr * r.mrr) / (n - 1.0);
    r.mrr_stderr = std::sqrt(std::max(0.0, var) / n);
  }
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["HR@1"] = hr1;
  j["HR@5"] = hr5;
  j["HR@10"] = hr10;
  j["NDCG@5"] = ndcg5;
  j["NDCG@10"] = ndcg10;
  j["MRR"] = mrr;
  j["MRR_stderr"] = mrr_stderr;
  j["users"] = users;
  j["negatives"] = negatives;
  j["layer"] = layer;
  j["stage"] = stage;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    r.hr1 = j.at("HR@1").get<double>();
    r.hr5 = j.at("HR@5").get<double>();
    r.hr10 = j.at("HR@10").get<double>();
    r.ndcg5 = j.at("NDCG@5").get<double>();
    r.ndcg10 = j.at("NDCG@10").get<double>();
    r.mrr = j.at("MRR").get<double>();
    r.mrr_stderr = j.value("MRR_stderr", 0.0);
    r.users = j.at("users").get<std::int64_t>();
    r.negatives = j.value("negatives", std::int64_t{0});
    r.layer = j.value("layer", std::int64_t{0});
    r.stage = j.value("stage", std::string());
    r.seed = j.value("seed", std::uint64_t{0});
    r.config_hash = j.value("config_hash", std::string());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics json: ") + e.what());
  }
}

std::string MetricsReport::to_table() const {
  std::string out = fmt::format("{:<8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "stage",
                                "HR@1", "HR@5", "HR@10", "NDCG@5", "NDCG@10", "MRR");
  out += fmt::format("{:<8} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n",
                     stage.empty() ? "-" : stage, hr1, hr5, hr10, ndcg5, ndcg10, mrr);
  out += fmt::format("users={} negatives={} layer={} seed={}\n", users, negatives,
                     layer, seed);
  return out;
}

}  // namespace slmrec::eval
