// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "slmrec/common/errors.h"
#include "slmrec/data/synthetic.h"
#include "slmrec/model/checkpoint.h"
#include "slmrec/model/pretrain.h"
#include "slmrec/model/trainer.h"
#include "support/micro_model.h"

namespace slmrec::model {
namespace {

namespace fs = std::filesystem;
using testing::micro_config;

std::int64_t visited_count(const DecoderWeights<float>& w, bool trainable_only) {
  std::int64_t n = 0;
  w.visit([&](const std::string&, const Tensor<float>& t, bool trainable) {
    if (trainable || !trainable_only) {
      n += t.numel();
    }
  });
  return n;
}

TEST(Config, FfnWidthDefault) {
  ModelConfig c;
  c.hidden = 256;
  EXPECT_EQ(c.resolved_ffn_dim(), 688);  // 2/3 * 1024 = 682.67 -> 688
  c.hidden = 16;
  EXPECT_EQ(c.resolved_ffn_dim(), 48);
  c.ffn_dim = 20;
  EXPECT_EQ(c.resolved_ffn_dim(), 20);
}

TEST(Config, ValidationNamesTheConstraint) {
  ModelConfig c = micro_config();
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = micro_config();
  c.layers = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, PairsRoundTripAndRejectUnknownKeys) {
  const ModelConfig c = micro_config(3);
  EXPECT_EQ(ModelConfig::from_pairs(c.to_pairs()), c);
  EXPECT_THROW(ModelConfig::from_pairs({{"layers", "2"}, {"depth", "4"}}), ConfigError);
}

TEST(Params, FormulaMatchesTensorCountAndHandValue) {
  ModelConfig c = micro_config(2);
  c.freeze_embedding = true;
  const auto w = init_model<float>(c, 1);
  EXPECT_EQ(count_parameters(c, false), visited_count(w, false));
  EXPECT_EQ(count_parameters(c, true), visited_count(w, true));
  EXPECT_EQ(w.parameter_count(true), count_parameters(c, true));
  // d1=16, d0=8, P=2, d_ff=48, vocab=11.
  const std::int64_t layer = 4 * 256 + 3 * 16 * 48 + 2 * 16;
  EXPECT_EQ(count_parameters(c, true), 8 * 16 + 2 * 16 + 2 * layer + 16 + 16 * 8);
  EXPECT_EQ(count_parameters(c, false) - count_parameters(c, true), 11 * 8);
}

TEST(Params, GrowWithDepth) {
  std::int64_t prev = 0;
  for (std::int64_t l : {1, 2, 4, 8}) {
    const std::int64_t n = count_parameters(micro_config(l), true);
    EXPECT_GT(n, prev);
    prev = n;
  }
}

TEST(Init, DeterministicInSeedWithZeroPaddingRow) {
  const auto a = init_model<float>(micro_config(), 5);
  const auto b = init_model<float>(micro_config(), 5);
  const auto c = init_model<float>(micro_config(), 6);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  for (std::int64_t j = 0; j < a.id_embedding.cols(); ++j) {
    EXPECT_EQ(a.id_embedding.at(0, j), 0.0f);
  }
  for (float g : a.final_norm.values()) {
    EXPECT_EQ(g, 1.0f);
  }
}

Tensor<double> user_rows(const DecoderWeights<double>& w, const SequenceView& view,
                         std::int64_t layer) {
  Graph<double> g;
  g.set_grad_enabled(false);
  auto bound = bind_model(g, w, false);
  auto trace = forward(bound, w.config, view);
  return user_representation(trace, layer).value();
}

TEST(Forward, PaddedPositionsDoNotLeakIntoRealOnes) {
  auto w = testing::micro_weights(micro_config(), 3);
  const testing::MicroBatch batch;
  const auto before = user_rows(w, batch.view(), 2);
  for (std::int64_t j = 0; j < w.id_embedding.cols(); ++j) {
    w.id_embedding.at(0, j) = 7.0;
  }
  const auto after = user_rows(w, batch.view(), 2);
  for (std::int64_t i = 0; i < before.numel(); ++i) {
    EXPECT_NEAR(before[i], after[i], 1e-12);
  }
}

TEST(Forward, RowsAreIndependentOfTheirBatch) {
  const auto w = testing::micro_weights(micro_config(), 4);
  const testing::MicroBatch batch;
  const auto all = user_rows(w, batch.view(), 2);
  const std::vector<std::int32_t> ids(batch.ids.begin() + 8, batch.ids.end());
  const std::vector<std::uint8_t> mask(batch.mask.begin() + 8, batch.mask.end());
  const auto one = user_rows(w, SequenceView{1, 4, ids, mask}, 2);
  for (std::int64_t j = 0; j < one.numel(); ++j) {
    EXPECT_NEAR(one[j], all.at(2, j), 1e-12);
  }
}

TEST(Forward, AttentionIsCausal) {
  // Changing the last item must not move the state at the previous position.
  const auto w = testing::micro_weights(micro_config(), 5);
  std::vector<std::int32_t> ids{1, 2, 3, 4};
  const std::vector<std::uint8_t> mask{1, 1, 1, 1};
  const auto hidden_at = [&](std::int64_t row) {
    Graph<double> g;
    g.set_grad_enabled(false);
    auto bound = bind_model(g, w, false);
    auto trace = forward(bound, w.config, SequenceView{1, 4, ids, mask});
    const auto& h = trace.hidden.back().value();
    return std::vector<double>(h.row(row).begin(), h.row(row).end());
  };
  const std::int64_t row = w.config.prefix_len + 2;
  const auto before = hidden_at(row);
  const auto last_before = hidden_at(row + 1);
  ids[3] = 9;
  const auto after = hidden_at(row);
  EXPECT_EQ(before, after);
  EXPECT_NE(last_before, hidden_at(row + 1));
}

TEST(Forward, InferScoresMatchesGraphPath) {
  const auto wd = testing::micro_weights(micro_config(), 6);
  const auto w = wd.cast<float>();
  const testing::MicroBatch batch;
  const auto fast = infer_scores(w, batch.view(), 1);
  Graph<float> g;
  g.set_grad_enabled(false);
  auto bound = bind_model(g, w, false);
  auto trace = forward(bound, w.config, batch.view());
  const auto slow = score_items(bound, user_representation(trace, 1)).value();
  ASSERT_EQ(fast.shape(), slow.shape());
  EXPECT_EQ(fast.shape(), (Shape{3, 10}));
  for (std::int64_t i = 0; i < fast.numel(); ++i) {
    EXPECT_NEAR(fast[i], slow[i], 1e-5);
  }
}

TEST(Gradients, MicroModelMatchesFiniteDifferences) {
  auto w = testing::micro_weights(micro_config(), 11);
  const auto r = testing::check_micro_model(w, nullptr);
  for (const auto& t : r.tensors) {
    EXPECT_LT(t.relative, 1e-3) << t.name;
  }
}

TEST(Gradients, MicroDistillationObjectiveMatchesFiniteDifferences) {
  auto w = testing::micro_weights(micro_config(), 12);
  auto kd = testing::micro_kd(12);
  const auto r = testing::check_micro_model(w, &kd);
  for (const auto& t : r.tensors) {
    EXPECT_LT(t.relative, 1e-3) << t.name;
  }
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("slmrec_model_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Checkpoint, RoundTripsExactly) {
  const auto w = init_model<float>(micro_config(), 9);
  const fs::path dir = temp_dir("roundtrip");
  auto ckpt = to_checkpoint(w);
  ckpt.meta["step"] = "12";
  save_checkpoint(ckpt, dir / "a.ckpt");
  const auto back = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(back.meta.at("step"), "12");
  EXPECT_TRUE(weights_from_checkpoint(back) == w);
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto w = init_model<float>(micro_config(), 9);
  const fs::path dir = temp_dir("corrupt");
  save_checkpoint(to_checkpoint(w), dir / "a.ckpt");
  const auto size = fs::file_size(dir / "a.ckpt");
  {
    std::fstream f(dir / "a.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(size - 5));
    f.put('\x7f');
  }
  EXPECT_THROW(load_checkpoint(dir / "a.ckpt"), FormatError);
  fs::resize_file(dir / "a.ckpt", size / 2);
  EXPECT_THROW(load_checkpoint(dir / "a.ckpt"), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(Checkpoint, ShapeMismatchIsAFormatError) {
  auto ckpt = to_checkpoint(init_model<float>(micro_config(), 9));
  ckpt.tensors[1].second = Tensor<float>(Shape{3, 3});
  EXPECT_THROW(weights_from_checkpoint(ckpt), FormatError);
}

data::SplitDataset tiny_split() {
  return data::prepare_split(
             data::generate_synthetic(data::SyntheticSpec::parse("users=60 items=30 seed=2")))
      .split;
}

TEST(Training, IsDeterministicAndReducesLoss) {
  const auto split = tiny_split();
  ModelConfig c = micro_config(2);
  c.num_items = split.num_items;
  c.seq_len = 8;
  TrainOptions opt;
  opt.max_steps = 40;
  opt.warmup_steps = 4;
  opt.batch_size = 16;
  opt.eval_every = 20;
  opt.optim.learning_rate = 1e-2;
  const Validator none = [](const DecoderWeights<float>&, std::int64_t) { return 0.0; };
  auto a = init_model<float>(c, 3);
  auto b = init_model<float>(c, 3);
  const auto ra = fit_supervised(a, split, opt, none);
  const auto rb = fit_supervised(b, split, opt, none);
  ASSERT_EQ(ra.steps.size(), 40u);
  for (std::size_t i = 0; i < ra.steps.size(); ++i) {
    EXPECT_EQ(ra.steps[i].loss, rb.steps[i].loss);
  }
  EXPECT_TRUE(a == b);
  EXPECT_LT(ra.steps.back().loss, ra.steps.front().loss);
}

TEST(Training, BestCheckpointTiesGoToLaterStep) {
  const auto split = tiny_split();
  ModelConfig c = micro_config(1);
  c.num_items = split.num_items;
  TrainOptions opt;
  opt.max_steps = 6;
  opt.eval_every = 2;
  auto w = init_model<float>(c, 3);
  const auto r = fit_supervised(w, split, opt,
                                [](const DecoderWeights<float>&, std::int64_t) { return 1.0; });
  EXPECT_EQ(r.evals.size(), 3u);
  EXPECT_EQ(r.best_step, 6);
}

TEST(Pretrain, NextItemTargetsSkipPadding) {
  data::Batch b;
  b.seq_len = 3;
  b.append({{0, 3, 4}, {0, 1, 1}}, 7, 0, 0);
  const auto t = next_item_targets(b);
  // position 1 predicts 4, position 2 predicts the label 7
  EXPECT_EQ(t.rows, (std::vector<std::int64_t>{1, 2}));
  EXPECT_EQ(t.columns, (std::vector<std::int32_t>{3, 6}));
}

TEST(Pretrain, ProducesTableWithZeroPaddingRow) {
  const auto split = tiny_split();
  PretrainOptions opt;
  opt.id_dim = 8;
  opt.layers = 1;
  opt.seq_len = 8;
  opt.steps = 10;
  opt.batch_size = 16;
  const auto r = pretrain_id_embeddings(split, opt);
  EXPECT_EQ(r.item_embedding.shape(), (Shape{split.num_items + 1, 8}));
  for (std::int64_t j = 0; j < 8; ++j) {
    EXPECT_EQ(r.item_embedding.at(0, j), 0.0f);
  }
  EXPECT_EQ(r.losses.size(), 10u);
}

}  // namespace
}  // namespace slmrec::model
