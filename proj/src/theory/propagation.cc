// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/theory/propagation.h"

#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "slmrec/common/errors.h"
#include "slmrec/common/random.h"
#include "slmrec/compute/kernels.h"

namespace slmrec::theory {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor<double> to_tensor(const Matrix& m) {
  Tensor<double> t(Shape{m.rows(), m.cols()});
  Eigen::Map<RowMatrix>(t.data(), m.rows(), m.cols()) = m;
  return t;
}

Matrix from_tensor(const Tensor<double>& t) {
  return Eigen::Map<const RowMatrix>(t.data(), t.rows(), t.cols());
}

Matrix random_matrix(Rng& rng, std::int64_t rows, std::int64_t cols) {
  Matrix m(rows, cols);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      m(r, c) = rng.normal();
    }
  }
  return m;
}

}  // namespace

EquivalenceReport compare(const Matrix& expected, const Matrix& actual,
                          double tolerance) {
  if (expected.rows() != actual.rows() || expected.cols() != actual.cols()) {
    throw DimensionError(fmt::format("compare {}x{} with {}x{}", expected.rows(),
                                     expected.cols(), actual.rows(), actual.cols()));
  }
  EquivalenceReport r;
  const Matrix diff = expected - actual;
  r.max_abs = diff.size() == 0 ? 0.0 : diff.cwiseAbs().maxCoeff();
  const double scale = expected.norm();
  r.frob_rel = scale > 0 ? diff.norm() / scale : diff.norm();
  r.pass = std::isfinite(r.max_abs) && r.max_abs < tolerance;
  return r;
}

Matrix build_attention(const Matrix& q, const Matrix& k,
                       std::span<const std::int64_t> positions) {
  if (q.rows() != k.rows() || q.cols() != k.cols()) {
    throw DimensionError(fmt::format("attention needs matching Q and K, got {}x{} and {}x{}",
                                     q.rows(), q.cols(), k.rows(), k.cols()));
  }
  std::vector<std::int64_t> pos(positions.begin(), positions.end());
  if (pos.empty()) {
    pos.resize(static_cast<std::size_t>(q.rows()));
    std::iota(pos.begin(), pos.end(), std::int64_t{0});
  }
  const Matrix qr = from_tensor(kernels::rope_apply(to_tensor(q), pos));
  const Matrix kr = from_tensor(kernels::rope_apply(to_tensor(k), pos));
  const Matrix logits = (qr * kr.transpose()) / std::sqrt(static_cast<double>(q.cols()));
  return from_tensor(kernels::softmax_rows(to_tensor(logits)));
}

Matrix layer_update(const Matrix& h, const Matrix& a) { return h + a * h; }

Matrix energy_gradient(const Matrix& h, const Matrix& target) {
  return 2.0 * (h - target);
}

Matrix gradient_step(const Matrix& h, const Matrix& target, double step) {
  return h - step * energy_gradient(h, target);
}

EquivalenceReport check_prop1(const Matrix& h_prev, const Matrix& a, double tolerance) {
  const Matrix a_hat = a + Matrix::Identity(a.rows(), a.cols());
  const Matrix descent = gradient_step(h_prev, a_hat * h_prev, 0.5);
  return compare(layer_update(h_prev, a), descent, tolerance);
}

std::vector<EquivalenceReport> run_prop1_trials(std::uint64_t seed, std::int64_t trials,
                                                double tolerance) {
  Rng rng(derive_seed(seed, "prop1_trials"));
  std::vector<EquivalenceReport> out;
  for (std::int64_t t = 0; t < trials; ++t) {
    const auto tokens = static_cast<std::int64_t>(rng.uniform_index(16)) + 1;
    const auto dim = 2 * (static_cast<std::int64_t>(rng.uniform_index(8)) + 1);
    const Matrix h = random_matrix(rng, tokens, dim);
    const Matrix a = t % 2 == 0 ? random_matrix(rng, tokens, tokens)
                                : build_attention(random_matrix(rng, tokens, dim),
                                                  random_matrix(rng, tokens, dim));
    out.push_back(check_prop1(h, a, tolerance));
  }
  return out;
}

StackResult stack_propagate(const PropagationSpec& spec) {
  const std::int64_t n = spec.h0.rows();
  StackResult out;
  out.iterative = spec.h0;
  out.a_star = Matrix::Identity(n, n);
  for (const Matrix& a : spec.attention) {
    if (a.rows() != n || a.cols() != n) {
      throw DimensionError(fmt::format("attention {}x{} for {} tokens", a.rows(),
                                       a.cols(), n));
    }
    out.iterative = layer_update(out.iterative, a);
    out.a_star = (Matrix::Identity(n, n) + a) * out.a_star;
  }
  out.closed_form = out.a_star * spec.h0;
  out.agreement = compare(out.iterative, out.closed_form, 1e-10);
  return out;
}

Matrix c_star(const Matrix& a_star, double mu) {
  if (!(mu > 0)) {
    throw ConfigError("step scale mu must be positive");
  }
  return (a_star - (1.0 - mu) * Matrix::Identity(a_star.rows(), a_star.cols())) / mu;
}

EquivalenceReport check_prop2(const PropagationSpec& spec, double tolerance) {
  const StackResult stack = stack_propagate(spec);
  const Matrix target = c_star(stack.a_star, spec.mu) * spec.h0;
  const Matrix descent = gradient_step(spec.h0, target, spec.mu / 2.0);
  return compare(stack.iterative, descent, tolerance);
}

std::vector<GridRow> run_grid(const GridOptions& options) {
  std::vector<GridRow> rows;
  Rng rng(derive_seed(options.seed, "theory_grid"));
  for (std::int64_t layers : options.layers) {
    for (std::int64_t tokens : options.tokens) {
      for (std::int64_t dim : options.dims) {
        PropagationSpec spec;
        spec.h0 = random_matrix(rng, tokens, dim);
        for (std::int64_t k = 0; k < layers; ++k) {
          spec.attention.push_back(build_attention(random_matrix(rng, tokens, dim),
                                                   random_matrix(rng, tokens, dim)));
        }
        for (double mu : options.mus) {
          spec.mu = mu;
          const EquivalenceReport r = check_prop2(spec, options.tolerance);
          rows.push_back({layers, tokens, dim, mu, r.max_abs, r.pass});
        }
      }
    }
  }
  return rows;
}

void write_grid_csv(const std::vector<GridRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "K,n_tok,d,mu,max_err,pass\n";
  for (const GridRow& r : rows) {
    out << fmt::format("{},{},{},{},{:.3e},{}\n", r.layers, r.tokens, r.dim, r.mu,
                       r.max_err, r.pass ? 1 : 0);
  }
}

}  // namespace slmrec::theory
