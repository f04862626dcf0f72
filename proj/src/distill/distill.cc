// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/distill/distill.h"

#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "slmrec/common/errors.h"
#include "slmrec/common/log.h"
#include "slmrec/common/random.h"
#include "slmrec/compute/ops.h"
#include "slmrec/data/batch.h"

namespace slmrec::distill {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Teacher tap features of every user's training input, by split row.
struct FeatureCache {
  std::vector<Tensor<float>> taps;  // per block: [num_users, d1]

  Tensor<float> rows(std::size_t block, const std::vector<std::int32_t>& split_rows) const {
    const Tensor<float>& src = taps[block];
    const std::int64_t d = src.cols();
    Tensor<float> out(Shape{static_cast<std::int64_t>(split_rows.size()), d});
    for (std::size_t i = 0; i < split_rows.size(); ++i) {
      auto row = src.row(split_rows[i]);
      std::copy(row.begin(), row.end(), out.data() + static_cast<std::int64_t>(i) * d);
    }
    return out;
  }
};

FeatureCache build_feature_cache(const model::DecoderWeights<float>& teacher,
                                 const data::SplitDataset& split,
                                 const BlockMap& map, std::int64_t batch_size) {
  const std::int64_t seq_len = teacher.config.seq_len;
  FeatureCache cache;
  for (std::int64_t k = 0; k < map.blocks; ++k) {
    cache.taps.emplace_back(Shape{split.num_users(), teacher.config.hidden});
  }
  std::vector<std::int32_t> rows;
  for (std::size_t i = 0; i < split.users.size(); ++i) {
    if (data::has_training_example(split.users[i])) {
      rows.push_back(static_cast<std::int32_t>(i));
    }
  }
  for (std::size_t start = 0; start < rows.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(rows.size(), start + static_cast<std::size_t>(batch_size));
    data::Batch batch;
    batch.seq_len = seq_len;
    for (std::size_t i = start; i < end; ++i) {
      const data::UserSplit& u = split.users[static_cast<std::size_t>(rows[i])];
      std::span<const std::int32_t> input(u.train.data(), u.train.size() - 1);
      batch.append(data::build_sequence(input, seq_len), u.train.back(), u.user_index,
                   rows[i]);
    }
    Graph<float> graph;
    graph.set_grad_enabled(false);
    model::BoundModel<float> bound = model::bind_model(graph, teacher, false);
    model::ForwardTrace<float> trace = model::forward(
        bound, teacher.config, model::SequenceView::of(batch), map.teacher_layers);
    for (std::int64_t k = 0; k < map.blocks; ++k) {
      const Tensor<float>& h =
          model::user_representation(trace, map.teacher_taps[k]).value();
      for (std::int64_t r = 0; r < batch.size; ++r) {
        auto src = h.row(r);
        std::copy(src.begin(), src.end(),
                  cache.taps[k].row(batch.split_rows[r]).begin());
      }
    }
  }
  return cache;
}

void add_adapters(AdamW<float>& opt, AdapterSet& adapters) {
  for (std::size_t k = 0; k < adapters.maps.size(); ++k) {
    opt.add_parameter("adapter." + std::to_string(k + 1), &adapters.maps[k]);
  }
}

bool needs_teacher(const LossWeights& w) { return w.lambda1 != 0 || w.lambda2 != 0; }

// Student-side graph pieces shared by both modes.
struct StudentPass {
  model::BoundModel<float> model;
  std::vector<Var<float>> adapters;
  std::vector<Var<float>> taps;
  Var<float> ce;
};

StudentPass student_pass(Graph<float>& graph, const model::DecoderWeights<float>& student,
                         const AdapterSet& adapters, const BlockMap& map,
                         const LossWeights& weights, const data::Batch& batch,
                         const std::vector<std::int32_t>& labels) {
  StudentPass pass;
  pass.model = model::bind_model(graph, student);
  model::ForwardTrace<float> trace =
      model::forward(pass.model, student.config, model::SequenceView::of(batch));
  Var<float> scores = model::score_items(
      pass.model, model::user_representation(trace, student.config.layers));
  pass.ce = ops::cross_entropy(scores, std::span<const std::int32_t>(labels));
  if (weights.any_active()) {
    for (std::int64_t tap : map.student_taps) {
      pass.taps.push_back(model::user_representation(trace, tap));
    }
  }
  for (const Tensor<float>& a : adapters.maps) {
    pass.adapters.push_back(graph.parameter(a));
  }
  return pass;
}

std::vector<const Tensor<float>*> collect_grads(const Graph<float>& graph,
                                                const std::vector<Var<float>>& params,
                                                const std::vector<Var<float>>& extra) {
  std::vector<const Tensor<float>*> grads;
  for (const Var<float>& p : params) {
    grads.push_back(graph.grad(p));
  }
  for (const Var<float>& p : extra) {
    grads.push_back(graph.grad(p));
  }
  return grads;
}

DistillStep record_terms(std::int64_t step, const LossTerms<float>& terms, double lr) {
  DistillStep rec;
  rec.step = step;
  rec.ce = terms.ce;
  rec.one_minus_cos = terms.one_minus_cos;
  rec.norm = terms.norm;
  rec.multi_supervision = terms.multi_supervision;
  rec.total = terms.total_value;
  rec.learning_rate = lr;
  if (!std::isfinite(rec.total)) {
    throw TrainingError("step " + std::to_string(step) + ": non-finite loss");
  }
  return rec;
}

// Periodic validation, checkpointing and best-student tracking.
class Tracker {
 public:
  Tracker(const DistillOptions& options, const model::Validator& validate,
          DistillResult& result)
      : options_(options), validate_(validate), result_(result) {}

  void maybe_evaluate(std::int64_t step, std::int64_t total,
                      const model::DecoderWeights<float>& student,
                      const AdapterSet& adapters) {
    const std::int64_t every = options_.train.eval_every;
    if (!((every > 0 && step % every == 0) || step == total)) {
      return;
    }
    const double metric = validate_(student, step);
    result_.evals.push_back({step, metric});
    log_info("step {} validation {:.5f}", step, metric);
    if (!options_.train.checkpoint_dir.empty()) {
      model::save_checkpoint(student_checkpoint(student, adapters),
                             options_.train.checkpoint_dir /
                                 ("student_step" + std::to_string(step) + ".ckpt"));
    }
    if (!have_best_ || metric >= result_.best_metric) {
      have_best_ = true;
      result_.best_metric = metric;
      result_.best_step = step;
      result_.best_student = student;
      result_.best_adapters = adapters;
    }
  }

 private:
  const DistillOptions& options_;
  const model::Validator& validate_;
  DistillResult& result_;
  bool have_best_ = false;
};

}  // namespace

AdapterSet AdapterSet::init(std::int64_t blocks, std::int64_t hidden,
                            std::int64_t id_dim, std::uint64_t seed) {
  AdapterSet set;
  for (std::int64_t k = 1; k < blocks; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    Tensor<float> m(Shape{hidden, id_dim});
    for (float& v : m.values()) {
      v = static_cast<float>(rng.truncated_normal(0.02));
    }
    set.maps.push_back(std::move(m));
  }
  return set;
}

std::int64_t AdapterSet::parameter_count() const {
  std::int64_t n = 0;
  for (const Tensor<float>& m : maps) {
    n += m.numel();
  }
  return n;
}

model::Checkpoint student_checkpoint(const model::DecoderWeights<float>& student,
                                     const AdapterSet& adapters) {
  model::Checkpoint ckpt = model::to_checkpoint(student);
  for (std::size_t k = 0; k < adapters.maps.size(); ++k) {
    ckpt.tensors.emplace_back("adapter." + std::to_string(k + 1), adapters.maps[k]);
  }
  ckpt.meta["adapters"] = std::to_string(adapters.maps.size());
  return ckpt;
}

AdapterSet adapters_from_checkpoint(const model::Checkpoint& ckpt) {
  AdapterSet set;
  for (std::size_t k = 1;; ++k) {
    const Tensor<float>* t = ckpt.find("adapter." + std::to_string(k));
    if (t == nullptr) {
      break;
    }
    set.maps.push_back(*t);
  }
  return set;
}

BlockMap check_pair(const model::ModelConfig& teacher,
                    const model::ModelConfig& student, std::int64_t blocks) {
  if (teacher.hidden != student.hidden) {
    throw ConfigError("teacher hidden size " + std::to_string(teacher.hidden) +
                      " differs from student hidden size " +
                      std::to_string(student.hidden));
  }
  if (teacher.num_items != student.num_items || teacher.id_dim != student.id_dim) {
    throw ConfigError("teacher and student item tables differ");
  }
  if (teacher.seq_len != student.seq_len) {
    throw ConfigError("teacher and student sequence lengths differ");
  }
  return make_block_map(teacher.layers, student.layers, blocks);
}

DistillResult distill_offline(const model::DecoderWeights<float>& teacher,
                              model::DecoderWeights<float>& student,
                              const data::SplitDataset& split,
                              const DistillOptions& options,
                              const model::Validator& validate) {
  const auto start = Clock::now();
  const BlockMap map = check_pair(teacher.config, student.config, options.kd.blocks);
  const LossWeights& weights = options.kd.weights;
  const model::TrainOptions& train = options.train;

  DistillResult result;
  FeatureCache cache;
  if (needs_teacher(weights)) {
    const auto cache_start = Clock::now();
    cache = build_feature_cache(teacher, split, map, 128);
    result.cache_seconds = seconds_since(cache_start);
  }

  data::BatchStream stream(split, student.config.seq_len, train.batch_size,
                           derive_seed(train.seed, "batches"));
  const std::int64_t total = model::resolve_max_steps(train, stream.batches_per_epoch());
  AdamW<float> opt = model::make_optimizer(student, train, total);
  AdapterSet adapters;
  if (weights.lambda3 != 0) {
    adapters = AdapterSet::init(map.blocks, student.config.hidden, student.config.id_dim,
                                derive_seed(train.seed, "adapters"));
    add_adapters(opt, adapters);
  }

  Tracker tracker(options, validate, result);
  for (std::int64_t step = 1; step <= total; ++step) {
    const auto step_start = Clock::now();
    const data::Batch& batch = stream.next();
    const std::vector<std::int32_t> labels = model::label_columns(batch);
    const double lr = opt.current_learning_rate();
    Graph<float> graph;
    try {
      StudentPass pass =
          student_pass(graph, student, adapters, map, weights, batch, labels);
      std::vector<Var<float>> teacher_taps;
      if (needs_teacher(weights)) {
        for (std::int64_t k = 0; k < map.blocks; ++k) {
          teacher_taps.push_back(
              graph.constant(cache.rows(static_cast<std::size_t>(k), batch.split_rows)));
        }
      }
      LossTerms<float> terms = total_loss<float>(
          pass.ce, teacher_taps, pass.taps, pass.adapters, pass.model.id_embedding,
          labels, weights);
      DistillStep rec = record_terms(step, terms, lr);
      graph.backward(terms.total);
      opt.step(collect_grads(graph, pass.model.trainable, pass.adapters));
      rec.seconds = seconds_since(step_start);
      if (options.on_step) {
        options.on_step(rec);
      }
      result.steps.push_back(rec);
    } catch (const NumericError& e) {
      throw TrainingError("step " + std::to_string(step) + ": " + e.what());
    }
    tracker.maybe_evaluate(step, total, student, adapters);
  }
  result.total_seconds = seconds_since(start);
  if (!options.log_csv.empty()) {
    write_step_log(result.steps, options.log_csv);
  }
  return result;
}

DistillResult distill_online(model::DecoderWeights<float>& teacher,
                             model::DecoderWeights<float>& student,
                             const data::SplitDataset& split,
                             const DistillOptions& options,
                             const model::Validator& validate) {
  const auto start = Clock::now();
  const BlockMap map = check_pair(teacher.config, student.config, options.kd.blocks);
  const LossWeights& weights = options.kd.weights;
  const model::TrainOptions& train = options.train;

  data::BatchStream stream(split, student.config.seq_len, train.batch_size,
                           derive_seed(train.seed, "batches"));
  const std::int64_t total = model::resolve_max_steps(train, stream.batches_per_epoch());
  AdamW<float> teacher_opt = model::make_optimizer(teacher, train, total);
  AdamW<float> student_opt = model::make_optimizer(student, train, total);
  AdapterSet adapters;
  if (weights.lambda3 != 0) {
    adapters = AdapterSet::init(map.blocks, student.config.hidden, student.config.id_dim,
                                derive_seed(train.seed, "adapters"));
    add_adapters(student_opt, adapters);
  }

  DistillResult result;
  Tracker tracker(options, validate, result);
  for (std::int64_t step = 1; step <= total; ++step) {
    const auto step_start = Clock::now();
    const data::Batch& batch = stream.next();
    const std::vector<std::int32_t> labels = model::label_columns(batch);
    const double lr = student_opt.current_learning_rate();
    Graph<float> graph;
    try {
      model::BoundModel<float> tmodel = model::bind_model(graph, teacher);
      model::ForwardTrace<float> ttrace =
          model::forward(tmodel, teacher.config, model::SequenceView::of(batch));
      Var<float> tscores = model::score_items(
          tmodel, model::user_representation(ttrace, teacher.config.layers));
      Var<float> teacher_ce =
          ops::cross_entropy(tscores, std::span<const std::int32_t>(labels));
      std::vector<Var<float>> teacher_taps;
      if (needs_teacher(weights)) {
        for (std::int64_t tap : map.teacher_taps) {
          Var<float> h = model::user_representation(ttrace, tap);
          teacher_taps.push_back(options.kd.detach_teacher ? ops::detach(h) : h);
        }
      }
      StudentPass pass =
          student_pass(graph, student, adapters, map, weights, batch, labels);
      LossTerms<float> terms = total_loss<float>(
          pass.ce, teacher_taps, pass.taps, pass.adapters, pass.model.id_embedding,
          labels, weights);
      DistillStep rec = record_terms(step, terms, lr);
      rec.teacher_ce = teacher_ce.value().item();
      graph.backward(ops::add(teacher_ce, terms.total));
      teacher_opt.step(collect_grads(graph, tmodel.trainable, {}));
      student_opt.step(collect_grads(graph, pass.model.trainable, pass.adapters));
      rec.seconds = seconds_since(step_start);
      if (options.on_step) {
        options.on_step(rec);
      }
      result.steps.push_back(rec);
    } catch (const NumericError& e) {
      throw TrainingError("step " + std::to_string(step) + ": " + e.what());
    }
    tracker.maybe_evaluate(step, total, student, adapters);
  }
  result.total_seconds = seconds_since(start);
  if (!options.log_csv.empty()) {
    write_step_log(result.steps, options.log_csv);
  }
  return result;
}

void write_step_log(const std::vector<DistillStep>& steps,
                    const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  auto opt = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.6g}", *v) : std::string();
  };
  out << "step,L_ce,1-D_cos,D_norm,L_ms,total,lr\n";
  for (const DistillStep& s : steps) {
    out << fmt::format("{},{:.6g},{},{},{},{:.6g},{:.6g}\n", s.step, s.ce,
                       opt(s.one_minus_cos), opt(s.norm), opt(s.multi_supervision),
                       s.total, s.learning_rate);
  }
}

}  // namespace slmrec::distill
