// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "slmrec/common/errors.h"
#include "slmrec/data/synthetic.h"
#include "slmrec/model/checkpoint.h"
#include "slmrec/prune/sweep.h"
#include "support/micro_model.h"

namespace slmrec::prune {
namespace {

namespace fs = std::filesystem;

struct Fixture {
  data::SplitDataset split;
  model::DecoderWeights<float> teacher;
  eval::EvalOptions eval;
};

Fixture tiny() {
  Fixture f;
  f.split = data::prepare_split(
                data::generate_synthetic(data::SyntheticSpec::parse("users=50 items=150 seed=9")))
                .split;
  auto c = testing::micro_config(4);
  c.num_items = f.split.num_items;
  c.seq_len = 8;
  c.freeze_embedding = true;
  f.teacher = testing::micro_weights(c, 2).cast<float>();
  f.eval.negatives = 40;
  return f;
}

TEST(Direct, FullDepthIsTheModelsOwnEvaluation) {
  const Fixture f = tiny();
  const auto own = eval::evaluate_model(f.teacher, f.split, f.eval);
  const auto direct = direct_layer_inference(f.teacher, 4, f.split, f.eval);
  EXPECT_EQ(direct.mrr, own.mrr);
  EXPECT_EQ(direct.hr10, own.hr10);
  EXPECT_EQ(direct_layer_inference(f.teacher, 2, f.split, f.eval).to_json(),
            direct_layer_inference(f.teacher, 2, f.split, f.eval).to_json());
}

TEST(Direct, OutOfRangeDepthIsAConfigError) {
  const Fixture f = tiny();
  EXPECT_THROW(direct_layer_inference(f.teacher, 0, f.split, f.eval), ConfigError);
  EXPECT_THROW(direct_layer_inference(f.teacher, 5, f.split, f.eval), ConfigError);
}

TEST(Direct, NeverMutatesWeightsOrCheckpoint) {
  const Fixture f = tiny();
  const fs::path path = fs::temp_directory_path() / "slmrec_prune_teacher.ckpt";
  model::save_checkpoint(model::to_checkpoint(f.teacher), path);
  const std::string before = [&] {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  const auto loaded = model::weights_from_checkpoint(model::load_checkpoint(path));
  const auto copy = loaded;
  for (std::int64_t k = 1; k <= 4; ++k) {
    direct_layer_inference(loaded, k, f.split, f.eval);
  }
  EXPECT_TRUE(loaded == copy);
  std::ifstream in(path, std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(in), {}), before);
}

TEST(Sweep, DirectRowsPlusBaseline) {
  Fixture f = tiny();
  SweepSpec spec;
  spec.layers = {1, 2, 4};
  spec.mode = SweepMode::kDirectInference;
  spec.teacher = f.teacher;
  spec.eval = f.eval;
  spec.baseline = f.teacher;
  const auto rows = run_sweep(spec, f.split);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows.back().mode, "baseline");
  EXPECT_EQ(rows[0].mode, "direct");
  EXPECT_EQ(rows[2].metrics.mrr, eval::evaluate_model(f.teacher, f.split, f.eval).mrr);
}

TEST(Sweep, TruncatedParamsMatchFormulaAndGrow) {
  Fixture f = tiny();
  SweepSpec spec;
  spec.layers = {1, 2};
  spec.mode = SweepMode::kTruncatedTraining;
  spec.truncated.base = f.teacher.config;
  spec.truncated.item_embedding = f.teacher.id_embedding;
  spec.truncated.train.max_steps = 6;
  spec.truncated.train.eval_every = 3;
  spec.truncated.train.batch_size = 16;
  spec.truncated.eval = f.eval;
  spec.eval = f.eval;
  const auto rows = run_sweep(spec, f.split);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    auto c = f.teacher.config;
    c.layers = r.layers;
    EXPECT_EQ(r.params, model::count_parameters(c, true));
    EXPECT_FALSE(r.failed);
    EXPECT_GT(r.metrics.mrr, 0.0);
  }
  EXPECT_LT(rows[0].params, rows[1].params);
}

TEST(Sweep, TruncatedEntryIsReproducible) {
  Fixture f = tiny();
  TruncatedSpec spec;
  spec.layers = 1;
  spec.base = f.teacher.config;
  spec.item_embedding = f.teacher.id_embedding;
  spec.train.max_steps = 5;
  spec.train.batch_size = 16;
  spec.eval = f.eval;
  spec.init_seed = 3;
  const auto a = train_truncated(spec, f.split);
  const auto b = train_truncated(spec, f.split);
  EXPECT_EQ(a.report.to_json(), b.report.to_json());
  EXPECT_TRUE(a.model == b.model);
  EXPECT_TRUE(a.model.id_embedding == f.teacher.id_embedding);
}

TEST(Sweep, CsvRoundTripsIncludingFailedRows) {
  SweepRow ok;
  ok.layers = 2;
  ok.mode = "truncated";
  ok.metrics.mrr = 0.25;
  ok.metrics.hr10 = 0.5;
  ok.params = 1234;
  ok.train_hours = 0.01;
  SweepRow bad;
  bad.layers = 4;
  bad.mode = "truncated";
  bad.failed = true;
  const fs::path path = fs::temp_directory_path() / "slmrec_sweep.csv";
  write_sweep_csv({ok, bad}, path);
  const auto back = read_sweep_csv(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].layers, 2);
  EXPECT_DOUBLE_EQ(back[0].metrics.mrr, 0.25);
  EXPECT_EQ(back[0].params, 1234);
  EXPECT_TRUE(back[1].failed);
}

}  // namespace
}  // namespace slmrec::prune
