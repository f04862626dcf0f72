// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

// Attention-only propagation H' = H + A H and its reading as gradient
// descent on a denoising energy. Everything here is 64-bit; FFN and
// normalisation are deliberately absent.
namespace slmrec::theory {

using Matrix = Eigen::MatrixXd;

struct EquivalenceReport {
  double max_abs = 0.0;
  double frob_rel = 0.0;
  bool pass = false;
};

EquivalenceReport compare(const Matrix& expected, const Matrix& actual,
                          double tolerance);

// Row softmax of rope(Q) rope(K)^T / sqrt(d_k). Q and K are n_tok x d_k with
// d_k even; positions default to 0..n_tok-1 when empty.
Matrix build_attention(const Matrix& q, const Matrix& k,
                       std::span<const std::int64_t> positions = {});

// (I + A) H.
Matrix layer_update(const Matrix& h, const Matrix& a);

// Gradient of ||H - target||^2 at H.
Matrix energy_gradient(const Matrix& h, const Matrix& target);

// h - step * energy_gradient(h, target).
Matrix gradient_step(const Matrix& h, const Matrix& target, double step);

// One gradient step of size 1/2 on ||H - (A + I) H_prev||^2 from H_prev,
// compared with layer_update(H_prev, A).
EquivalenceReport check_prop1(const Matrix& h_prev, const Matrix& a,
                              double tolerance = 1e-12);

// Random trials: even trials use free-form Gaussian A, odd trials softmax
// attention; n_tok is drawn from 1..16 and d from the even values 2..16.
std::vector<EquivalenceReport> run_prop1_trials(std::uint64_t seed, std::int64_t trials,
                                                double tolerance = 1e-12);

struct PropagationSpec {
  std::vector<Matrix> attention;  // A^(1..K), each n_tok x n_tok
  Matrix h0;                      // n_tok x d
  double mu = 1.0;
};

struct StackResult {
  Matrix iterative;    // K applications of layer_update
  Matrix a_star;       // (I + A^(K)) ... (I + A^(1))
  Matrix closed_form;  // a_star * h0
  EquivalenceReport agreement;  // iterative vs closed form at 1e-10
};

StackResult stack_propagate(const PropagationSpec& spec);

// C* = (A* - (1 - mu) I) / mu.
Matrix c_star(const Matrix& a_star, double mu);

// One gradient step of size mu/2 on ||H - C* H0||^2 from H0, compared with
// the K-layer output.
EquivalenceReport check_prop2(const PropagationSpec& spec, double tolerance = 1e-9);

struct GridRow {
  std::int64_t layers = 0;
  std::int64_t tokens = 0;
  std::int64_t dim = 0;
  double mu = 0.0;
  double max_err = 0.0;
  bool pass = false;
};

struct GridOptions {
  std::vector<std::int64_t> layers{1, 2, 4, 8};
  std::vector<std::int64_t> tokens{2, 8, 16};
  std::vector<std::int64_t> dims{4, 16};
  std::vector<double> mus{0.1, 0.5, 1.0, 2.0};
  std::uint64_t seed = 0;
  double tolerance = 1e-9;
};

// Random softmax attention stacks (rotary Q/K) over the full grid. The same
// stack is reused across mu values.
std::vector<GridRow> run_grid(const GridOptions& options);

void write_grid_csv(const std::vector<GridRow>& rows, const std::filesystem::path& path);

}  // namespace slmrec::theory
