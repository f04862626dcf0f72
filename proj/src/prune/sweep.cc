// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/prune/sweep.h"

#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"

namespace slmrec::prune {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kHour = 3600.0;
constexpr const char* kHeader =
    "l,mode,HR@1,HR@5,HR@10,NDCG@5,NDCG@10,MRR,params,train_hours,infer_hours";

std::string metric_field(const SweepRow& row, double value) {
  return row.failed ? "nan" : fmt::format("{:.6f}", value);
}

}  // namespace

std::string mode_name(SweepMode mode) {
  return mode == SweepMode::kDirectInference ? "direct" : "truncated";
}

eval::MetricsReport direct_layer_inference(const model::DecoderWeights<float>& teacher,
                                           std::int64_t k, const data::SplitDataset& split,
                                           const eval::EvalOptions& options) {
  const std::int64_t depth = teacher.config.layers;
  if (k < 1 || k > depth) {
    throw ConfigError(fmt::format("direct inference layer {} outside 1..{}", k, depth));
  }
  eval::EvalOptions probe = options;
  probe.layer = k;
  return eval::evaluate_model(teacher, split, probe);
}

TruncatedResult train_truncated(const TruncatedSpec& spec, const data::SplitDataset& split) {
  if (spec.layers < 1) {
    throw ConfigError(fmt::format("truncated depth must be >= 1, got {}", spec.layers));
  }
  model::ModelConfig config = spec.base;
  config.layers = spec.layers;
  config.validate();
  model::DecoderWeights<float> weights = model::init_model<float>(config, spec.init_seed);
  if (spec.item_embedding.shape() != weights.id_embedding.shape()) {
    throw ConfigError("item table " + shape_string(spec.item_embedding.shape()) +
                      " does not fit model " + shape_string(weights.id_embedding.shape()));
  }
  weights.id_embedding = spec.item_embedding;

  eval::EvalOptions valid = spec.eval;
  valid.stage = data::Stage::kValid;
  valid.layer = -1;
  TruncatedResult out;
  out.training = model::fit_supervised(
      weights, split, spec.train,
      [&](const model::DecoderWeights<float>& w, std::int64_t) {
        return eval::evaluate_model(w, split, valid).mrr;
      });
  out.model = out.training.best;
  const auto start = Clock::now();
  eval::EvalOptions final_eval = spec.eval;
  final_eval.layer = -1;
  out.report = eval::evaluate_model(out.model, split, final_eval);
  out.infer_seconds = seconds_since(start);
  return out;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const data::SplitDataset& split) {
  if (spec.layers.empty()) {
    throw ConfigError("sweep needs at least one layer value");
  }
  if (spec.mode == SweepMode::kDirectInference && !spec.teacher) {
    throw ConfigError("direct-inference sweep needs a trained model");
  }
  std::vector<SweepRow> rows;
  for (std::int64_t l : spec.layers) {
    SweepRow row;
    row.layers = l;
    row.mode = mode_name(spec.mode);
    if (spec.mode == SweepMode::kDirectInference) {
      const auto start = Clock::now();
      row.metrics = direct_layer_inference(*spec.teacher, l, split, spec.eval);
      row.infer_hours = seconds_since(start) / kHour;
      row.params = spec.teacher->parameter_count(true);
    } else {
      TruncatedSpec entry = spec.truncated;
      entry.layers = l;
      entry.eval = spec.eval;
      model::ModelConfig config = entry.base;
      config.layers = l;
      row.params = model::count_parameters(config, true);
      try {
        const TruncatedResult r = train_truncated(entry, split);
        row.metrics = r.report;
        row.train_hours = r.training.total_seconds / kHour;
        row.infer_hours = r.infer_seconds / kHour;
      } catch (const TrainingError& e) {
        log_warn("sweep entry l={} failed: {}", l, e.what());
        row.failed = true;
        row.error = e.what();
      }
    }
    log_info("sweep {} l={} MRR {:.4f}", row.mode, l, row.metrics.mrr);
    rows.push_back(std::move(row));
  }
  if (spec.baseline) {
    SweepRow row;
    row.layers = spec.baseline->config.layers;
    row.mode = "baseline";
    const auto start = Clock::now();
    eval::EvalOptions base_eval = spec.eval;
    base_eval.layer = -1;
    row.metrics = eval::evaluate_model(*spec.baseline, split, base_eval);
    row.infer_hours = seconds_since(start) / kHour;
    row.train_hours = spec.baseline_train_seconds / kHour;
    row.params = spec.baseline->parameter_count(false);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << kHeader << "\n";
  for (const SweepRow& r : rows) {
    const eval::MetricsReport& m = r.metrics;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{:.6e},{:.6e}\n", r.layers, r.mode,
                       metric_field(r, m.hr1), metric_field(r, m.hr5),
                       metric_field(r, m.hr10), metric_field(r, m.ndcg5),
                       metric_field(r, m.ndcg10), metric_field(r, m.mrr), r.params,
                       r.train_hours, r.infer_hours);
  }
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw FormatError(path.string() + ": unexpected sweep header");
  }
  std::vector<SweepRow> rows;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      f.push_back(cell);
    }
    if (f.size() != 11) {
      throw FormatError(fmt::format("{}:{}: expected 11 fields, got {}", path.string(),
                                    line_no, f.size()));
    }
    try {
      SweepRow r;
      r.layers = std::stoll(f[0]);
      r.mode = f[1];
      r.failed = f[7] == "nan";
      if (!r.failed) {
        r.metrics.hr1 = std::stod(f[2]);
        r.metrics.hr5 = std::stod(f[3]);
        r.metrics.hr10 = std::stod(f[4]);
        r.metrics.ndcg5 = std::stod(f[5]);
        r.metrics.ndcg10 = std::stod(f[6]);
        r.metrics.mrr = std::stod(f[7]);
      }
      r.params = std::stoll(f[8]);
      r.train_hours = std::stod(f[9]);
      r.infer_hours = std::stod(f[10]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw FormatError(fmt::format("{}:{}: bad number", path.string(), line_no));
    }
  }
  return rows;
}

}  // namespace slmrec::prune
