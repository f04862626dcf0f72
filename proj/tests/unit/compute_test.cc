// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "slmrec/common/errors.h"
#include "slmrec/compute/graph.h"
#include "slmrec/compute/kernels.h"
#include "slmrec/compute/ops.h"
#include "slmrec/compute/optim.h"
#include "support/finite_diff.h"
#include "support/primitive_cases.h"

namespace slmrec {
namespace {

using testing::check_gradients;
using testing::random_tensor;

TEST(Tensor, ShapeMismatchThrows) {
  EXPECT_THROW(Tensor<float>(Shape{2, 3}, std::vector<float>(5)), DimensionError);
  EXPECT_THROW(Tensor<float>(Shape{-1, 3}), DimensionError);
}

TEST(Tensor, RowsAndColumnsFlattenLeadingDims) {
  Tensor<double> t(Shape{2, 3, 4});
  EXPECT_EQ(t.rows(), 6);
  EXPECT_EQ(t.cols(), 4);
  EXPECT_EQ(t.numel(), 24);
}

TEST(Kernels, MatmulMatchesNaiveProduct) {
  Rng rng(3);
  const auto a = random_tensor(rng, Shape{5, 7});
  const auto b = random_tensor(rng, Shape{7, 4});
  const auto c = kernels::matmul(a, b);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0;
      for (int k = 0; k < 7; ++k) {
        s += a.at(i, k) * b.at(k, j);
      }
      EXPECT_NEAR(c.at(i, j), s, 1e-12);
    }
  }
}

TEST(Kernels, SoftmaxRowsSumToOne) {
  Rng rng(4);
  const auto s = kernels::softmax_rows(random_tensor(rng, Shape{6, 9}, 5.0));
  for (int r = 0; r < 6; ++r) {
    const auto row = s.row(r);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Kernels, SoftmaxIsStableForLargeLogits) {
  Tensor<float> x(Shape{1, 3}, {1000.0f, 1000.0f, -1000.0f});
  const auto s = kernels::softmax_rows(x);
  EXPECT_FLOAT_EQ(s[0], 0.5f);
  EXPECT_FLOAT_EQ(s[1], 0.5f);
  EXPECT_FLOAT_EQ(s[2], 0.0f);
}

TEST(Kernels, MaskedSoftmaxZeroesDisallowedAndEmptyRows) {
  Tensor<double> x(Shape{2, 3}, {1.0, 2.0, 3.0, 1.0, 1.0, 1.0});
  const std::vector<std::uint8_t> allowed{1, 0, 1, 0, 0, 0};
  const auto s = kernels::masked_softmax_rows(x, allowed);
  EXPECT_DOUBLE_EQ(s[1], 0.0);
  EXPECT_NEAR(s[0] + s[2], 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(s[3] + s[4] + s[5], 0.0);
}

TEST(Kernels, RopeIsAnIsometryAndInvertible) {
  Rng rng(5);
  const auto x = random_tensor(rng, Shape{4, 8});
  const std::vector<std::int64_t> pos{0, 1, 5, 30};
  const auto y = kernels::rope_apply(x, pos);
  const auto back = kernels::rope_apply(y, pos, true);
  for (int r = 0; r < 4; ++r) {
    double nx = 0, ny = 0;
    for (int c = 0; c < 8; ++c) {
      nx += x.at(r, c) * x.at(r, c);
      ny += y.at(r, c) * y.at(r, c);
      EXPECT_NEAR(back.at(r, c), x.at(r, c), 1e-12);
    }
    EXPECT_NEAR(nx, ny, 1e-12);
  }
  for (int c = 0; c < 8; ++c) {
    EXPECT_DOUBLE_EQ(y.at(0, c), x.at(0, c));  // position 0 is the identity
  }
}

TEST(Kernels, RopeRejectsNegativePositions) {
  Tensor<double> x(Shape{1, 4});
  const std::vector<std::int64_t> pos{-1};
  EXPECT_THROW(kernels::rope_apply(x, pos), DimensionError);
}

TEST(Kernels, RmsNormMatchesFormula) {
  Tensor<double> x(Shape{1, 4}, {1.0, -2.0, 3.0, -4.0});
  Tensor<double> gain(Shape{4}, {1.0, 0.5, 2.0, 1.0});
  const auto y = kernels::rms_norm(x, gain);
  const double rms = std::sqrt((1.0 + 4.0 + 9.0 + 16.0) / 4.0 + kernels::kRmsNormEps);
  EXPECT_NEAR(y[2], 3.0 / rms * 2.0, 1e-12);
}

class PrimitiveGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(PrimitiveGradient, MatchesCentralDifferences) {
  const auto cases = testing::primitive_cases();
  const auto& c = cases.at(GetParam());
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    Rng rng(derive_seed(trial, c.name));
    std::vector<Tensor<double>> inputs;
    for (const Shape& s : c.shapes) {
      inputs.push_back(random_tensor(rng, s, c.input_scale));
    }
    const auto r = check_gradients(inputs, {}, c.build);
    EXPECT_LT(r.worst_relative(), 1e-4) << c.name << " trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGradient,
                         ::testing::Range<std::size_t>(0, testing::primitive_cases().size()),
                         [](const ::testing::TestParamInfo<std::size_t>& info) {
                           return testing::primitive_cases()[info.param].name;
                         });

TEST(Graph, GradientsAccumulateOverReuse) {
  Graph<double> g;
  Tensor<double> x(Shape{2}, {1.5, -2.0});
  auto v = g.parameter(x);
  auto y = ops::sum(ops::add(v, v));
  g.backward(y);
  EXPECT_DOUBLE_EQ((*g.grad(v))[0], 2.0);
  EXPECT_DOUBLE_EQ((*g.grad(v))[1], 2.0);
}

TEST(Graph, DetachBlocksGradient) {
  Graph<double> g;
  Tensor<double> x(Shape{2}, {1.0, 2.0});
  auto v = g.parameter(x);
  auto y = ops::sum(ops::mul(ops::detach(v), v));
  g.backward(y);
  EXPECT_DOUBLE_EQ((*g.grad(v))[0], 1.0);
  EXPECT_DOUBLE_EQ((*g.grad(v))[1], 2.0);
}

TEST(Graph, DisabledGradRecordsNoBackward) {
  Graph<double> g;
  g.set_grad_enabled(false);
  Tensor<double> x(Shape{2}, {1.0, 2.0});
  auto v = g.parameter(x, false);
  auto y = ops::sum(v);
  EXPECT_FALSE(g.requires_grad(y));
}

TEST(Graph, BackwardNeedsScalarRoot) {
  Graph<double> g;
  Tensor<double> x(Shape{2}, {1.0, 2.0});
  auto v = g.parameter(x);
  EXPECT_THROW(g.backward(ops::scale(v, 2.0)), DimensionError);
}

TEST(Ops, ShapeMismatchIsReported) {
  Graph<double> g;
  Tensor<double> a(Shape{2, 3}), b(Shape{4, 2});
  EXPECT_THROW(ops::matmul(g.parameter(a), g.parameter(b)), DimensionError);
  Tensor<double> c(Shape{2, 2});
  EXPECT_THROW(ops::add(g.parameter(a), g.parameter(c)), DimensionError);
}

TEST(Ops, CrossEntropyOfUniformScoresIsLogN) {
  Graph<double> g;
  Tensor<double> s(Shape{2, 8});
  const std::vector<std::int32_t> labels{3, 7};
  const auto loss = ops::cross_entropy(g.parameter(s), std::span<const std::int32_t>(labels));
  EXPECT_NEAR(loss.value().item(), std::log(8.0), 1e-12);
}

TEST(Ops, RowCosineOfZeroRowIsZero) {
  Graph<double> g;
  Tensor<double> a(Shape{2, 2}, {0.0, 0.0, 1.0, 0.0});
  Tensor<double> b(Shape{2, 2}, {1.0, 1.0, 2.0, 0.0});
  int zeros = 0;
  const auto c = ops::row_cosine(g.parameter(a), g.parameter(b), &zeros);
  EXPECT_DOUBLE_EQ(c.value()[0], 0.0);
  EXPECT_DOUBLE_EQ(c.value()[1], 1.0);
  EXPECT_EQ(zeros, 1);
}

TEST(Ops, EmbeddingPadRowGetsNoGradient) {
  Graph<double> g;
  Tensor<double> table(Shape{3, 2}, {1, 2, 3, 4, 5, 6});
  const std::vector<std::int32_t> ids{0, 2, 0, 1};
  auto t = g.parameter(table);
  g.backward(ops::sum(ops::embedding(t, std::span<const std::int32_t>(ids))));
  const auto& grad = *g.grad(t);
  EXPECT_EQ(grad.at(0, 0), 0.0);
  EXPECT_EQ(grad.at(0, 1), 0.0);
  EXPECT_EQ(grad.at(1, 0), 1.0);
  EXPECT_EQ(grad.at(2, 1), 1.0);
}

TEST(Schedule, WarmupThenHalfCosine) {
  LrSchedule s{LrSchedule::Kind::kCosine, 10, 110};
  EXPECT_DOUBLE_EQ(s.factor(0), 0.0);
  EXPECT_DOUBLE_EQ(s.factor(5), 0.5);
  EXPECT_DOUBLE_EQ(s.factor(10), 1.0);
  EXPECT_NEAR(s.factor(60), 0.5, 1e-12);
  EXPECT_NEAR(s.factor(110), 0.0, 1e-12);
  LrSchedule c{LrSchedule::Kind::kConstant, 4, 100};
  EXPECT_DOUBLE_EQ(c.factor(2), 0.5);
  EXPECT_DOUBLE_EQ(c.factor(50), 1.0);
}

TEST(AdamW, FirstStepsMatchHandComputedUpdate) {
  AdamWConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  cfg.max_grad_norm = 0.0;
  AdamW<double> opt(cfg, LrSchedule{LrSchedule::Kind::kConstant, 0, 10});
  Tensor<double> p(Shape{2}, {1.0, -1.0});
  opt.add_parameter("p", &p);
  double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -1.0};
  const double grads[2][2] = {{0.5, -2.0}, {0.1, 0.3}};
  for (int t = 1; t <= 2; ++t) {
    Tensor<double> g(Shape{2}, {grads[t - 1][0], grads[t - 1][1]});
    const Tensor<double>* gp = &g;
    opt.step(std::span<const Tensor<double>* const>(&gp, 1));
    for (int j = 0; j < 2; ++j) {
      ref[j] *= 1.0 - 0.1 * 0.01;
      m[j] = 0.9 * m[j] + 0.1 * grads[t - 1][j];
      v[j] = 0.999 * v[j] + 0.001 * grads[t - 1][j] * grads[t - 1][j];
      const double mh = m[j] / (1 - std::pow(0.9, t));
      const double vh = v[j] / (1 - std::pow(0.999, t));
      ref[j] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(p[j], ref[j], 1e-12);
    }
  }
}

TEST(AdamW, ClipsByGlobalNorm) {
  AdamWConfig cfg;
  cfg.max_grad_norm = 1.0;
  AdamW<double> opt(cfg, LrSchedule{LrSchedule::Kind::kConstant, 0, 10});
  Tensor<double> a(Shape{1}), b(Shape{1});
  opt.add_parameter("a", &a);
  opt.add_parameter("b", &b);
  Tensor<double> ga(Shape{1}, {3.0}), gb(Shape{1}, {4.0});
  const Tensor<double>* grads[2] = {&ga, &gb};
  const auto info = opt.step(std::span<const Tensor<double>* const>(grads, 2));
  EXPECT_DOUBLE_EQ(info.grad_norm, 5.0);
  EXPECT_DOUBLE_EQ(info.clip_scale, 0.2);
  EXPECT_NEAR(opt.first_moment(0)[0], 0.1 * 0.6, 1e-15);
}

TEST(AdamW, RejectsNonFiniteGradient) {
  AdamW<double> opt(AdamWConfig{}, LrSchedule{});
  Tensor<double> a(Shape{1});
  opt.add_parameter("a", &a);
  Tensor<double> g(Shape{1}, {std::nan("")});
  const Tensor<double>* gp = &g;
  EXPECT_THROW(opt.step(std::span<const Tensor<double>* const>(&gp, 1)), TrainingError);
}

}  // namespace
}  // namespace slmrec
