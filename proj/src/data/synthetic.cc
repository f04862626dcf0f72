// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/data/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/core.h>

#include "slmrec/common/errors.h"
#include "slmrec/common/random.h"

namespace slmrec::data {

SyntheticSpec SyntheticSpec::parse(const std::string& text) {
  SyntheticSpec spec;
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("synthetic spec token '" + token + "' is not key=value");
    }
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "users") {
        spec.users = std::stoll(value);
      } else if (key == "items") {
        spec.items = std::stoll(value);
      } else if (key == "min_length") {
        spec.min_length = std::stoll(value);
      } else if (key == "max_length") {
        spec.max_length = std::stoll(value);
      } else if (key == "latent_dim") {
        spec.latent_dim = std::stoll(value);
      } else if (key == "groups") {
        spec.groups = std::stoll(value);
      } else if (key == "transition_prob") {
        spec.transition_prob = std::stod(value);
      } else if (key == "temperature") {
        spec.temperature = std::stod(value);
      } else if (key == "negative_feedback_prob") {
        spec.negative_feedback_prob = std::stod(value);
      } else if (key == "seed") {
        spec.seed = std::stoull(value);
      } else {
        throw ConfigError("unknown synthetic spec key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad value for synthetic spec key '" + key + "'");
    }
  }
  if (spec.users < 1 || spec.items < 2 || spec.min_length < 1 ||
      spec.max_length < spec.min_length || spec.groups < 1 ||
      spec.latent_dim < 1 || spec.temperature <= 0.0) {
    throw ConfigError("invalid synthetic spec: " + spec.to_string());
  }
  return spec;
}

std::string SyntheticSpec::to_string() const {
  return fmt::format(
      "users={} items={} min_length={} max_length={} latent_dim={} groups={} "
      "transition_prob={} temperature={} negative_feedback_prob={} seed={}",
      users, items, min_length, max_length, latent_dim, groups, transition_prob,
      temperature, negative_feedback_prob, seed);
}

std::vector<InteractionRecord> generate_synthetic(const SyntheticSpec& spec) {
  Rng rng(derive_seed(spec.seed, "synthetic"));
  const auto n_items = static_cast<std::size_t>(spec.items);
  const auto dim = static_cast<std::size_t>(spec.latent_dim);
  const double factor_scale = 1.0 / std::sqrt(static_cast<double>(dim));

  std::vector<double> item_factors(n_items * dim);
  for (double& v : item_factors) {
    v = rng.normal();
  }
  std::vector<std::vector<std::int64_t>> successor(
      static_cast<std::size_t>(spec.groups), std::vector<std::int64_t>(n_items));
  for (auto& map : successor) {
    std::iota(map.begin(), map.end(), 0);
    rng.shuffle(map.begin(), map.end());
  }

  std::vector<InteractionRecord> records;
  std::vector<double> cdf(n_items);
  std::vector<double> user(dim);
  for (std::int64_t u = 0; u < spec.users; ++u) {
    const std::string user_id = fmt::format("u{:06d}", u);
    const auto group = static_cast<std::size_t>(
        rng.uniform_index(static_cast<std::uint64_t>(spec.groups)));
    for (double& v : user) {
      v = rng.normal();
    }
    double max_logit = -1e300;
    for (std::size_t i = 0; i < n_items; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        dot += user[j] * item_factors[i * dim + j];
      }
      cdf[i] = dot * factor_scale / spec.temperature;
      max_logit = std::max(max_logit, cdf[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n_items; ++i) {
      total += std::exp(cdf[i] - max_logit);
      cdf[i] = total;
    }
    auto draw_preferred = [&]() {
      const double r = rng.uniform() * total;
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
      return static_cast<std::int64_t>(
          std::min<std::size_t>(n_items - 1, static_cast<std::size_t>(it - cdf.begin())));
    };

    const std::int64_t length =
        spec.min_length + static_cast<std::int64_t>(rng.uniform_index(
                              static_cast<std::uint64_t>(spec.max_length - spec.min_length + 1)));
    std::int64_t ts = 1'000'000'000 + static_cast<std::int64_t>(rng.uniform_index(10'000'000));
    std::int64_t item = draw_preferred();
    for (std::int64_t step = 0; step < length; ++step) {
      if (step > 0) {
        item = rng.uniform() < spec.transition_prob ? successor[group][static_cast<std::size_t>(item)]
                                                    : draw_preferred();
      }
      const double rating = rng.uniform() < 0.5 ? 4.0 : 5.0;
      records.push_back({user_id, fmt::format("i{:05d}", item), rating, ts});
      ts += 1 + static_cast<std::int64_t>(rng.uniform_index(86'400));
      if (rng.uniform() < spec.negative_feedback_prob) {
        const auto other = static_cast<std::int64_t>(rng.uniform_index(n_items));
        const double low = 1.0 + static_cast<double>(rng.uniform_index(3));
        records.push_back({user_id, fmt::format("i{:05d}", other), low, ts});
        ts += 1 + static_cast<std::int64_t>(rng.uniform_index(86'400));
      }
    }
  }
  return records;
}

}  // namespace slmrec::data
