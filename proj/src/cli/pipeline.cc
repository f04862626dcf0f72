// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/cli/pipeline.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"
#include "slmrec/common/random.h"
#include "slmrec/data/interactions.h"
#include "slmrec/data/synthetic.h"
#include "slmrec/eval/evaluate.h"

namespace slmrec::cli {
namespace {

using ojson = nlohmann::ordered_json;

constexpr double kHour = 3600.0;

std::string csv_number(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

data::PreparedData prepare_data(const RunConfig& config) {
  std::vector<data::InteractionRecord> records;
  if (config.data_input.empty()) {
    records = data::generate_synthetic(config.synthetic_spec());
  } else {
    data::LoadResult loaded = data::load_interactions(config.data_input);
    if (loaded.malformed_rows > 0) {
      log_warn("{}: skipped {} malformed rows", config.data_input, loaded.malformed_rows);
    }
    records = std::move(loaded.records);
  }
  return data::prepare_split(records, config.positive_threshold,
                             static_cast<int>(config.min_actions));
}

model::DecoderWeights<float> fresh_model(const model::ModelConfig& config,
                                         const Tensor<float>& item_embedding,
                                         std::uint64_t seed, std::string_view stream) {
  model::DecoderWeights<float> w = model::init_model<float>(config, derive_seed(seed, stream));
  if (item_embedding.shape() != w.id_embedding.shape()) {
    throw ConfigError("item table " + shape_string(item_embedding.shape()) +
                      " does not match model table " + shape_string(w.id_embedding.shape()));
  }
  w.id_embedding = item_embedding;
  return w;
}

model::Validator validation_mrr(const RunConfig& config, const data::SplitDataset& split) {
  const eval::EvalOptions options = config.eval_options(data::Stage::kValid);
  return [options, &split](const model::DecoderWeights<float>& w, std::int64_t) {
    return eval::evaluate_model(w, split, options).mrr;
  };
}

model::TrainResult train_teacher(const RunConfig& config, const data::SplitDataset& split,
                                 const Tensor<float>& item_embedding,
                                 const std::filesystem::path& checkpoint_dir,
                                 const std::function<void(const model::StepRecord&)>& on_step) {
  model::DecoderWeights<float> teacher = fresh_model(
      config.teacher_config(split.num_items), item_embedding, config.seed, "teacher_init");
  model::TrainOptions options = config.train_options(false);
  options.checkpoint_dir = checkpoint_dir;
  options.on_step = on_step;
  return model::fit_supervised(teacher, split, options, validation_mrr(config, split));
}

distill::DistillResult run_distill(const RunConfig& config, const data::SplitDataset& split,
                                   const model::DecoderWeights<float>& teacher,
                                   const Tensor<float>& item_embedding,
                                   const std::filesystem::path& checkpoint_dir,
                                   const std::function<void(const distill::DistillStep&)>&
                                       on_step) {
  model::DecoderWeights<float> student = fresh_model(
      config.student_config(split.num_items), item_embedding, config.seed, "student_init");
  distill::DistillOptions options;
  options.kd = config.distill_config();
  options.train = config.train_options(options.kd.mode == distill::Mode::kOffline);
  options.train.checkpoint_dir = checkpoint_dir;
  options.on_step = on_step;
  if (!checkpoint_dir.empty()) {
    options.log_csv = checkpoint_dir / "distill_log.csv";
  }
  const model::Validator validate = validation_mrr(config, split);
  if (options.kd.mode == distill::Mode::kOnline) {
    model::DecoderWeights<float> joint_teacher = fresh_model(
        config.teacher_config(split.num_items), item_embedding, config.seed, "teacher_init");
    return distill::distill_online(joint_teacher, student, split, options, validate);
  }
  if (teacher.config.to_pairs() != config.teacher_config(split.num_items).to_pairs()) {
    log_warn("teacher checkpoint config differs from the run config; using the checkpoint's");
  }
  return distill::distill_offline(teacher, student, split, options, validate);
}

double median_step_seconds(const std::vector<double>& seconds) {
  if (seconds.empty()) {
    return 0.0;
  }
  std::vector<double> s = seconds;
  const auto mid = s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2);
  std::nth_element(s.begin(), mid, s.end());
  if (s.size() % 2 == 1) {
    return *mid;
  }
  const double upper = *mid;
  const double lower = *std::max_element(s.begin(), mid);
  return 0.5 * (lower + upper);
}

nlohmann::ordered_json RunRecord::to_json() const {
  ojson j;
  j["command"] = command;
  j["profile"] = config.profile;
  j["seed"] = config.seed;
  j["config_hash"] = config.hash();
  ojson cfg = ojson::object();
  for (const auto& [k, v] : config.to_pairs()) {
    cfg[k] = v;
  }
  j["config"] = cfg;
  j["wall_seconds"] = wall_seconds;
  j["layers"] = layers;
  j["params"] = params;
  j["total_params"] = total_params;
  j["step_seconds"] = step_seconds ? ojson(*step_seconds) : ojson(nullptr);
  j["train_seconds"] = train_seconds;
  j["infer_seconds"] = infer_seconds;
  j["valid"] = valid ? ojson::parse(valid->to_json()) : ojson(nullptr);
  j["test"] = test ? ojson::parse(test->to_json()) : ojson(nullptr);
  j["extra"] = extra;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    throw IoError("cannot write " + path.string());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_run_json(const RunRecord& record, const std::filesystem::path& dir) {
  write_text_file(dir / "run.json", record.to_json().dump(2) + "\n");
}

std::vector<ReportRow> collect_report(const std::vector<std::filesystem::path>& run_dirs) {
  std::vector<ReportRow> rows;
  for (const auto& dir : run_dirs) {
    const auto path = dir / "run.json";
    if (!std::filesystem::exists(path)) {
      log_warn("{}: no run.json, skipped", dir.string());
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(read_text_file(path));
      ReportRow row;
      row.run = dir.filename().empty() ? dir.parent_path().filename().string()
                                       : dir.filename().string();
      row.command = j.at("command").get<std::string>();
      row.layers = j.value("layers", std::int64_t{0});
      row.params = j.value("params", std::int64_t{0});
      row.train_hours = j.value("train_seconds", 0.0) / kHour;
      row.infer_hours = j.value("infer_seconds", 0.0) / kHour;
      if (j.contains("step_seconds") && !j["step_seconds"].is_null()) {
        row.step_seconds = j["step_seconds"].get<double>();
      }
      for (const char* stage : {"test", "valid"}) {
        if (j.contains(stage) && !j[stage].is_null()) {
          row.metrics = eval::MetricsReport::from_json(j[stage].dump());
          break;
        }
      }
      rows.push_back(std::move(row));
    } catch (const nlohmann::json::exception& e) {
      log_warn("{}: unreadable run.json ({}), skipped", dir.string(), e.what());
    } catch (const FormatError& e) {
      log_warn("{}: {}, skipped", dir.string(), e.what());
    }
  }
  return rows;
}

std::optional<Ratios> student_teacher_ratios(const std::vector<ReportRow>& rows) {
  const auto find = [&](const std::string& command) -> const ReportRow* {
    for (const ReportRow& r : rows) {
      if (r.command == command) {
        return &r;
      }
    }
    return nullptr;
  };
  const ReportRow* teacher = find("train-teacher");
  const ReportRow* student = find("distill");
  if (teacher == nullptr || student == nullptr || teacher->params == 0) {
    return std::nullopt;
  }
  Ratios r;
  r.params = static_cast<double>(student->params) / static_cast<double>(teacher->params);
  if (teacher->step_seconds && student->step_seconds && *teacher->step_seconds > 0) {
    r.step_seconds = *student->step_seconds / *teacher->step_seconds;
  }
  if (teacher->metrics && student->metrics && teacher->metrics->mrr > 0) {
    r.mrr = student->metrics->mrr / teacher->metrics->mrr;
  }
  return r;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out =
      "run,l,mode,HR@1,HR@5,HR@10,NDCG@5,NDCG@10,MRR,params,train_hours,infer_hours,"
      "step_seconds\n";
  for (const ReportRow& r : rows) {
    std::string metrics = ",,,,,";
    if (r.metrics) {
      const auto& m = *r.metrics;
      metrics = fmt::format("{},{},{},{},{},{}", csv_number(m.hr1), csv_number(m.hr5),
                            csv_number(m.hr10), csv_number(m.ndcg5), csv_number(m.ndcg10),
                            csv_number(m.mrr));
    }
    out += fmt::format("{},{},{},{},{},{:.6e},{:.6e},{}\n", r.run, r.layers, r.command,
                       metrics, r.params, r.train_hours, r.infer_hours,
                       r.step_seconds ? csv_number(*r.step_seconds) : std::string());
  }
  if (const auto ratio = student_teacher_ratios(rows)) {
    out += fmt::format("ratio,,student/teacher,,,,,,{},{:.6f},,,{}\n",
                       ratio->mrr ? csv_number(*ratio->mrr) : std::string(), ratio->params,
                       ratio->step_seconds ? csv_number(*ratio->step_seconds) : std::string());
  }
  return out;
}

}  // namespace slmrec::cli
