// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/compute/ops.h"

#include <cmath>
#include <limits>
#include <string>

namespace slmrec::ops {
namespace {

template <typename T>
void require_same_shape(const char* op, Var<T> a, Var<T> b) {
  if (a.graph != b.graph) {
    throw IndexError(std::string(op) + ": operands live on different graphs");
  }
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

// Adds scale * src into x's gradient buffer when x needs a gradient.
template <typename T>
void accumulate(Graph<T>& g, Var<T> x, const Tensor<T>& src, T factor = T(1)) {
  if (!g.requires_grad(x)) {
    return;
  }
  Tensor<T>& dst = g.grad_buffer(x);
  T* d = dst.data();
  const T* s = src.data();
  for (std::int64_t i = 0; i < dst.numel(); ++i) {
    d[i] += factor * s[i];
  }
}

template <typename T>
void softmax_backward(const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>& dx) {
  const std::int64_t n = y.cols();
  for (std::int64_t r = 0; r < y.rows(); ++r) {
    const T* yr = y.data() + r * n;
    const T* gr = dy.data() + r * n;
    T* dr = dx.data() + r * n;
    T dot = 0;
    for (std::int64_t j = 0; j < n; ++j) {
      dot += yr[j] * gr[j];
    }
    for (std::int64_t j = 0; j < n; ++j) {
      dr[j] += yr[j] * (gr[j] - dot);
    }
  }
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b, bool trans_b) {
  Graph<T>& g = *a.graph;
  Tensor<T> out = kernels::matmul(a.value(), b.value(), trans_b);
  return g.record("matmul", std::move(out), {a, b},
                  [a, b, trans_b](Graph<T>& g, const Tensor<T>&,
                                  const Tensor<T>& grad) {
                    const Tensor<T>& av = a.value();
                    const Tensor<T>& bv = b.value();
                    const std::int64_t m = av.rows();
                    const std::int64_t k = av.cols();
                    const std::int64_t n = grad.cols();
                    if (g.requires_grad(a)) {
                      // dA = dC * B^T  (or dC * B when B was used transposed)
                      kernels::gemm(grad.data(), bv.data(), g.grad_buffer(a).data(),
                                    m, n, k, false, !trans_b, true);
                    }
                    if (g.requires_grad(b)) {
                      if (trans_b) {
                        // C = A B^T  =>  dB = dC^T A
                        kernels::gemm(grad.data(), av.data(),
                                      g.grad_buffer(b).data(), n, m, k, true,
                                      false, true);
                      } else {
                        kernels::gemm(av.data(), grad.data(),
                                      g.grad_buffer(b).data(), k, m, n, true,
                                      false, true);
                      }
                    }
                  });
}

template <typename T>
Var<T> batched_matmul(Var<T> a, Var<T> b, bool trans_b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0)) {
    throw DimensionError("batched_matmul expects [G,m,k] and [G,k,n], got " +
                         shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  const std::int64_t groups = av.dim(0);
  const std::int64_t m = av.dim(1);
  const std::int64_t k = av.dim(2);
  const std::int64_t bk = trans_b ? bv.dim(2) : bv.dim(1);
  const std::int64_t n = trans_b ? bv.dim(1) : bv.dim(2);
  if (k != bk) {
    throw DimensionError("batched_matmul inner extents differ: " +
                         shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  Tensor<T> out(Shape{groups, m, n});
  for (std::int64_t gi = 0; gi < groups; ++gi) {
    kernels::gemm(av.data() + gi * m * k, bv.data() + gi * k * n,
                  out.data() + gi * m * n, m, k, n, false, trans_b, false);
  }
  return a.graph->record(
      "batched_matmul", std::move(out), {a, b},
      [a, b, trans_b, groups, m, k, n](Graph<T>& g, const Tensor<T>&,
                                       const Tensor<T>& grad) {
        const Tensor<T>& av = a.value();
        const Tensor<T>& bv = b.value();
        const bool need_a = g.requires_grad(a);
        const bool need_b = g.requires_grad(b);
        T* da = need_a ? g.grad_buffer(a).data() : nullptr;
        T* db = need_b ? g.grad_buffer(b).data() : nullptr;
        for (std::int64_t gi = 0; gi < groups; ++gi) {
          const T* gr = grad.data() + gi * m * n;
          const T* ap = av.data() + gi * m * k;
          const T* bp = bv.data() + gi * k * n;
          if (need_a) {
            kernels::gemm(gr, bp, da + gi * m * k, m, n, k, false, !trans_b,
                          true);
          }
          if (need_b) {
            if (trans_b) {
              kernels::gemm(gr, ap, db + gi * k * n, n, m, k, true, false, true);
            } else {
              kernels::gemm(ap, gr, db + gi * k * n, k, m, n, true, false, true);
            }
          }
        }
      });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape("add", a, b);
  Tensor<T> out = a.value();
  const T* bp = b.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[i] += bp[i];
  }
  return a.graph->record("add", std::move(out), {a, b},
                         [a, b](Graph<T>& g, const Tensor<T>&,
                                const Tensor<T>& grad) {
                           accumulate(g, a, grad);
                           accumulate(g, b, grad);
                         });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape("sub", a, b);
  Tensor<T> out = a.value();
  const T* bp = b.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[i] -= bp[i];
  }
  return a.graph->record("sub", std::move(out), {a, b},
                         [a, b](Graph<T>& g, const Tensor<T>&,
                                const Tensor<T>& grad) {
                           accumulate(g, a, grad);
                           accumulate(g, b, grad, T(-1));
                         });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape("mul", a, b);
  Tensor<T> out = a.value();
  const T* bp = b.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[i] *= bp[i];
  }
  return a.graph->record(
      "mul", std::move(out), {a, b},
      [a, b](Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        const std::int64_t n = grad.numel();
        if (g.requires_grad(a)) {
          T* da = g.grad_buffer(a).data();
          const T* bv = b.value().data();
          for (std::int64_t i = 0; i < n; ++i) {
            da[i] += grad[i] * bv[i];
          }
        }
        if (g.requires_grad(b)) {
          T* db = g.grad_buffer(b).data();
          const T* av = a.value().data();
          for (std::int64_t i = 0; i < n; ++i) {
            db[i] += grad[i] * av[i];
          }
        }
      });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out = a.value();
  for (T& v : out.values()) {
    v *= factor;
  }
  return a.graph->record("scale", std::move(out), {a},
                         [a, factor](Graph<T>& g, const Tensor<T>&,
                                     const Tensor<T>& grad) {
                           accumulate(g, a, grad, factor);
                         });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T offset) {
  Tensor<T> out = a.value();
  for (T& v : out.values()) {
    v += offset;
  }
  return a.graph->record(
      "add_scalar", std::move(out), {a},
      [a](Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        accumulate(g, a, grad);
      });
}

template <typename T>
Var<T> silu(Var<T> a) {
  Tensor<T> out = a.value();
  for (T& v : out.values()) {
    v = v / (T(1) + std::exp(-v));
  }
  return a.graph->record(
      "silu", std::move(out), {a},
      [a](Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        if (!g.requires_grad(a)) {
          return;
        }
        T* da = g.grad_buffer(a).data();
        const T* x = a.value().data();
        for (std::int64_t i = 0; i < grad.numel(); ++i) {
          const T s = T(1) / (T(1) + std::exp(-x[i]));
          da[i] += grad[i] * s * (T(1) + x[i] * (T(1) - s));
        }
      });
}

template <typename T>
Var<T> softmax_rows(Var<T> x) {
  return x.graph->record(
      "softmax_rows", kernels::softmax_rows(x.value()), {x},
      [x](Graph<T>& g, const Tensor<T>& y, const Tensor<T>& grad) {
        if (g.requires_grad(x)) {
          softmax_backward(y, grad, g.grad_buffer(x));
        }
      });
}

template <typename T>
Var<T> masked_softmax_rows(
    Var<T> x, std::shared_ptr<const std::vector<std::uint8_t>> allowed) {
  Tensor<T> out = kernels::masked_softmax_rows(x.value(), *allowed);
  // Masked entries have y == 0, so the plain softmax rule gives them zero
  // gradient and fully masked rows contribute nothing.
  return x.graph->record(
      "masked_softmax_rows", std::move(out), {x},
      [x](Graph<T>& g, const Tensor<T>& y, const Tensor<T>& grad) {
        if (g.requires_grad(x)) {
          softmax_backward(y, grad, g.grad_buffer(x));
        }
      });
}

template <typename T>
Var<T> rms_norm(Var<T> x, Var<T> gain, double eps) {
  Tensor<T> out = kernels::rms_norm(x.value(), gain.value(), eps);
  return x.graph->record(
      "rms_norm", std::move(out), {x, gain},
      [x, gain, eps](Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        const Tensor<T>& xv = x.value();
        const Tensor<T>& gv = gain.value();
        const std::int64_t d = xv.cols();
        const bool need_x = g.requires_grad(x);
        const bool need_g = g.requires_grad(gain);
        T* dx = need_x ? g.grad_buffer(x).data() : nullptr;
        T* dg = need_g ? g.grad_buffer(gain).data() : nullptr;
        for (std::int64_t r = 0; r < xv.rows(); ++r) {
          const T* xr = xv.data() + r * d;
          const T* gr = grad.data() + r * d;
          T sq = 0;
          for (std::int64_t j = 0; j < d; ++j) {
            sq += xr[j] * xr[j];
          }
          const T inv =
              T(1) / std::sqrt(sq / static_cast<T>(d) + static_cast<T>(eps));
          if (need_g) {
            for (std::int64_t j = 0; j < d; ++j) {
              dg[j] += gr[j] * xr[j] * inv;
            }
          }
          if (need_x) {
            T dot = 0;
            for (std::int64_t j = 0; j < d; ++j) {
              dot += gr[j] * gv[j] * xr[j];
            }
            const T coeff = inv * inv * inv * dot / static_cast<T>(d);
            T* dxr = dx + r * d;
            for (std::int64_t j = 0; j < d; ++j) {
              dxr[j] += inv * gr[j] * gv[j] - coeff * xr[j];
            }
          }
        }
      });
}

template <typename T>
Var<T> rope_apply(Var<T> x, std::vector<std::int64_t> positions, double base) {
  Tensor<T> out = kernels::rope_apply(x.value(), positions, false, base);
  return x.graph->record(
      "rope_apply", std::move(out), {x},
      [x, positions = std::move(positions), base](
          Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        if (g.requires_grad(x)) {
          // Rotations are orthogonal: the adjoint is the inverse rotation.
          accumulate(g, x, kernels::rope_apply(grad, positions, true, base));
        }
      });
}

template <typename T>
Var<T> split_heads(Var<T> x, std::int64_t batch, std::int64_t seq,
                   std::int64_t heads) {
  const Tensor<T>& xv = x.value();
  const std::int64_t width = xv.cols();
  if (xv.rows() != batch * seq || width % heads != 0) {
    throw DimensionError("split_heads: cannot view " + shape_string(xv.shape()) +
                         " as batch=" + std::to_string(batch) +
                         " seq=" + std::to_string(seq) +
                         " heads=" + std::to_string(heads));
  }
  const std::int64_t hd = width / heads;
  Tensor<T> out(Shape{batch * heads, seq, hd});
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t s = 0; s < seq; ++s) {
      const T* src = xv.data() + (b * seq + s) * width;
      for (std::int64_t h = 0; h < heads; ++h) {
        std::copy(src + h * hd, src + (h + 1) * hd,
                  out.data() + ((b * heads + h) * seq + s) * hd);
      }
    }
  }
  return x.graph->record(
      "split_heads", std::move(out), {x},
      [x, batch, seq, heads, hd, width](Graph<T>& g, const Tensor<T>&,
                                        const Tensor<T>& grad) {
        if (!g.requires_grad(x)) {
          return;
        }
        T* dx = g.grad_buffer(x).data();
        for (std::int64_t b = 0; b < batch; ++b) {
          for (std::int64_t s = 0; s < seq; ++s) {
            T* dst = dx + (b * seq + s) * width;
            for (std::int64_t h = 0; h < heads; ++h) {
              const T* src = grad.data() + ((b * heads + h) * seq + s) * hd;
              for (std::int64_t j = 0; j < hd; ++j) {
                dst[h * hd + j] += src[j];
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> merge_heads(Var<T> x, std::int64_t batch, std::int64_t heads) {
  const Tensor<T>& xv = x.value();
  if (xv.rank() != 3 || xv.dim(0) != batch * heads) {
    throw DimensionError("merge_heads: unexpected shape " +
                         shape_string(xv.shape()));
  }
  const std::int64_t seq = xv.dim(1);
  const std::int64_t hd = xv.dim(2);
  const std::int64_t width = heads * hd;
  Tensor<T> out(Shape{batch * seq, width});
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t h = 0; h < heads; ++h) {
      for (std::int64_t s = 0; s < seq; ++s) {
        const T* src = xv.data() + ((b * heads + h) * seq + s) * hd;
        std::copy(src, src + hd, out.data() + (b * seq + s) * width + h * hd);
      }
    }
  }
  return x.graph->record(
      "merge_heads", std::move(out), {x},
      [x, batch, heads, seq, hd, width](Graph<T>& g, const Tensor<T>&,
                                        const Tensor<T>& grad) {
        if (!g.requires_grad(x)) {
          return;
        }
        T* dx = g.grad_buffer(x).data();
        for (std::int64_t b = 0; b < batch; ++b) {
          for (std::int64_t h = 0; h < heads; ++h) {
            for (std::int64_t s = 0; s < seq; ++s) {
              const T* src = grad.data() + (b * seq + s) * width + h * hd;
              T* dst = dx + ((b * heads + h) * seq + s) * hd;
              for (std::int64_t j = 0; j < hd; ++j) {
                dst[j] += src[j];
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> embedding(Var<T> table, std::span<const std::int32_t> ids,
                 std::int32_t pad_id) {
  const Tensor<T>& tv = table.value();
  const std::int64_t rows = tv.rows();
  const std::int64_t d = tv.cols();
  Tensor<T> out(Shape{static_cast<std::int64_t>(ids.size()), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= rows) {
      throw IndexError("embedding id " + std::to_string(ids[i]) +
                       " outside table of " + std::to_string(rows) + " rows");
    }
    const T* src = tv.data() + ids[i] * d;
    std::copy(src, src + d, out.data() + static_cast<std::int64_t>(i) * d);
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return table.graph->record(
      "embedding", std::move(out), {table},
      [table, saved = std::move(saved), pad_id, d](
          Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        if (!g.requires_grad(table)) {
          return;
        }
        T* dt = g.grad_buffer(table).data();
        for (std::size_t i = 0; i < saved.size(); ++i) {
          if (saved[i] == pad_id) {
            continue;
          }
          const T* src = grad.data() + static_cast<std::int64_t>(i) * d;
          T* dst = dt + saved[i] * d;
          for (std::int64_t j = 0; j < d; ++j) {
            dst[j] += src[j];
          }
        }
      });
}

template <typename T>
Var<T> prepend_rows(Var<T> prefix, Var<T> x, std::int64_t batch) {
  const Tensor<T>& pv = prefix.value();
  const Tensor<T>& xv = x.value();
  const std::int64_t d = xv.cols();
  const std::int64_t p = pv.numel() == 0 ? 0 : pv.rows();
  if ((p > 0 && pv.cols() != d) || xv.rows() % batch != 0) {
    throw DimensionError("prepend_rows: prefix " + shape_string(pv.shape()) +
                         " onto " + shape_string(xv.shape()));
  }
  const std::int64_t t = xv.rows() / batch;
  const std::int64_t s = p + t;
  Tensor<T> out(Shape{batch * s, d});
  for (std::int64_t b = 0; b < batch; ++b) {
    T* dst = out.data() + b * s * d;
    std::copy(pv.data(), pv.data() + p * d, dst);
    std::copy(xv.data() + b * t * d, xv.data() + (b + 1) * t * d, dst + p * d);
  }
  return x.graph->record(
      "prepend_rows", std::move(out), {prefix, x},
      [prefix, x, batch, p, t, s, d](Graph<T>& g, const Tensor<T>&,
                                     const Tensor<T>& grad) {
        if (p > 0 && g.requires_grad(prefix)) {
          T* dp = g.grad_buffer(prefix).data();
          for (std::int64_t b = 0; b < batch; ++b) {
            const T* src = grad.data() + b * s * d;
            for (std::int64_t i = 0; i < p * d; ++i) {
              dp[i] += src[i];
            }
          }
        }
        if (g.requires_grad(x)) {
          T* dx = g.grad_buffer(x).data();
          for (std::int64_t b = 0; b < batch; ++b) {
            const T* src = grad.data() + (b * s + p) * d;
            T* dst = dx + b * t * d;
            for (std::int64_t i = 0; i < t * d; ++i) {
              dst[i] += src[i];
            }
          }
        }
      });
}

template <typename T>
Var<T> gather_rows(Var<T> x, std::vector<std::int64_t> rows) {
  const Tensor<T>& xv = x.value();
  const std::int64_t d = xv.cols();
  Tensor<T> out(Shape{static_cast<std::int64_t>(rows.size()), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= xv.rows()) {
      throw IndexError("gather_rows: row " + std::to_string(rows[i]) +
                       " of " + std::to_string(xv.rows()));
    }
    const T* src = xv.data() + rows[i] * d;
    std::copy(src, src + d, out.data() + static_cast<std::int64_t>(i) * d);
  }
  return x.graph->record(
      "gather_rows", std::move(out), {x},
      [x, rows = std::move(rows), d](Graph<T>& g, const Tensor<T>&,
                                     const Tensor<T>& grad) {
        if (!g.requires_grad(x)) {
          return;
        }
        T* dx = g.grad_buffer(x).data();
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const T* src = grad.data() + static_cast<std::int64_t>(i) * d;
          T* dst = dx + rows[i] * d;
          for (std::int64_t j = 0; j < d; ++j) {
            dst[j] += src[j];
          }
        }
      });
}

template <typename T>
Var<T> slice_rows(Var<T> x, std::int64_t begin, std::int64_t end) {
  const Tensor<T>& xv = x.value();
  if (begin < 0 || end > xv.rows() || begin > end) {
    throw IndexError("slice_rows [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") of " + std::to_string(xv.rows()));
  }
  const std::int64_t d = xv.cols();
  Tensor<T> out(Shape{end - begin, d},
                std::vector<T>(xv.data() + begin * d, xv.data() + end * d));
  return x.graph->record(
      "slice_rows", std::move(out), {x},
      [x, begin, d](Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        if (!g.requires_grad(x)) {
          return;
        }
        T* dst = g.grad_buffer(x).data() + begin * d;
        for (std::int64_t i = 0; i < grad.numel(); ++i) {
          dst[i] += grad[i];
        }
      });
}

template <typename T>
Var<T> cross_entropy(Var<T> scores, std::span<const std::int32_t> labels) {
  const Tensor<T>& sv = scores.value();
  const std::int64_t n = sv.cols();
  if (static_cast<std::int64_t>(labels.size()) != sv.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(sv.rows()) + " rows");
  }
  for (std::int32_t y : labels) {
    if (y < 0 || y >= n) {
      throw IndexError("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(n) + ")");
    }
  }
  Tensor<T> probs = kernels::softmax_rows(sv);
  T total = 0;
  for (std::int64_t r = 0; r < sv.rows(); ++r) {
    const T* row = sv.data() + r * n;
    const T max_v = *std::max_element(row, row + n);
    T z = 0;
    for (std::int64_t j = 0; j < n; ++j) {
      z += std::exp(row[j] - max_v);
    }
    total += max_v + std::log(z) - row[labels[r]];
  }
  const T rows = static_cast<T>(sv.rows());
  std::vector<std::int32_t> saved(labels.begin(), labels.end());
  return scores.graph->record(
      "cross_entropy", Tensor<T>::scalar(total / rows), {scores},
      [scores, probs = std::move(probs), saved = std::move(saved), n, rows](
          Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        if (!g.requires_grad(scores)) {
          return;
        }
        T* ds = g.grad_buffer(scores).data();
        const T scale = grad[0] / rows;
        for (std::size_t r = 0; r < saved.size(); ++r) {
          const T* p = probs.data() + static_cast<std::int64_t>(r) * n;
          T* d = ds + static_cast<std::int64_t>(r) * n;
          for (std::int64_t j = 0; j < n; ++j) {
            d[j] += scale * p[j];
          }
          d[saved[r]] -= scale;
        }
      });
}

template <typename T>
Var<T> row_cosine(Var<T> a, Var<T> b, int* zero_pairs) {
  require_same_shape("row_cosine", a, b);
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  const std::int64_t rows = av.rows();
  const std::int64_t d = av.cols();
  Tensor<T> out(Shape{rows});
  // Per row: |a|, |b|, or 0 when the pair is degenerate.
  std::vector<T> norm_a(rows), norm_b(rows);
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* x = av.data() + r * d;
    const T* y = bv.data() + r * d;
    T dot = 0, xx = 0, yy = 0;
    for (std::int64_t j = 0; j < d; ++j) {
      dot += x[j] * y[j];
      xx += x[j] * x[j];
      yy += y[j] * y[j];
    }
    if (xx == T(0) || yy == T(0)) {
      if (zero_pairs) {
        ++*zero_pairs;
      }
      norm_a[r] = norm_b[r] = 0;
      out[r] = 0;
      continue;
    }
    norm_a[r] = std::sqrt(xx);
    norm_b[r] = std::sqrt(yy);
    out[r] = dot / (norm_a[r] * norm_b[r]);
  }
  return a.graph->record(
      "row_cosine", std::move(out), {a, b},
      [a, b, norm_a = std::move(norm_a), norm_b = std::move(norm_b), d](
          Graph<T>& g, const Tensor<T>& cos, const Tensor<T>& grad) {
        const Tensor<T>& av = a.value();
        const Tensor<T>& bv = b.value();
        const bool need_a = g.requires_grad(a);
        const bool need_b = g.requires_grad(b);
        T* da = need_a ? g.grad_buffer(a).data() : nullptr;
        T* db = need_b ? g.grad_buffer(b).data() : nullptr;
        for (std::size_t r = 0; r < norm_a.size(); ++r) {
          if (norm_a[r] == T(0)) {
            continue;
          }
          const std::int64_t off = static_cast<std::int64_t>(r) * d;
          const T c = cos[static_cast<std::int64_t>(r)];
          const T gr = grad[static_cast<std::int64_t>(r)];
          const T inv_ab = T(1) / (norm_a[r] * norm_b[r]);
          const T inv_aa = T(1) / (norm_a[r] * norm_a[r]);
          const T inv_bb = T(1) / (norm_b[r] * norm_b[r]);
          for (std::int64_t j = 0; j < d; ++j) {
            const T x = av[off + j];
            const T y = bv[off + j];
            if (need_a) {
              da[off + j] += gr * (y * inv_ab - c * x * inv_aa);
            }
            if (need_b) {
              db[off + j] += gr * (x * inv_ab - c * y * inv_bb);
            }
          }
        }
      });
}

template <typename T>
Var<T> row_squared_distance(Var<T> a, Var<T> b) {
  require_same_shape("row_squared_distance", a, b);
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  const std::int64_t d = av.cols();
  Tensor<T> out(Shape{av.rows()});
  for (std::int64_t r = 0; r < av.rows(); ++r) {
    T acc = 0;
    for (std::int64_t j = 0; j < d; ++j) {
      const T diff = av[r * d + j] - bv[r * d + j];
      acc += diff * diff;
    }
    out[r] = acc;
  }
  return a.graph->record(
      "row_squared_distance", std::move(out), {a, b},
      [a, b, d](Graph<T>& g, const Tensor<T>&, const Tensor<T>& grad) {
        const Tensor<T>& av = a.value();
        const Tensor<T>& bv = b.value();
        const bool need_a = g.requires_grad(a);
        const bool need_b = g.requires_grad(b);
        T* da = need_a ? g.grad_buffer(a).data() : nullptr;
        T* db = need_b ? g.grad_buffer(b).data() : nullptr;
        for (std::int64_t i = 0; i < av.numel(); ++i) {
          const T v = T(2) * grad[i / d] * (av[i] - bv[i]);
          if (need_a) {
            da[i] += v;
          }
          if (need_b) {
            db[i] -= v;
          }
        }
      });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T acc = 0;
  for (T v : x.value().values()) {
    acc += v;
  }
  return x.graph->record("sum", Tensor<T>::scalar(acc), {x},
                         [x](Graph<T>& g, const Tensor<T>&,
                             const Tensor<T>& grad) {
                           if (!g.requires_grad(x)) {
                             return;
                           }
                           for (T& v : g.grad_buffer(x).values()) {
                             v += grad[0];
                           }
                         });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const T n = static_cast<T>(x.value().numel());
  T acc = 0;
  for (T v : x.value().values()) {
    acc += v;
  }
  return x.graph->record("mean", Tensor<T>::scalar(acc / n), {x},
                         [x, n](Graph<T>& g, const Tensor<T>&,
                                const Tensor<T>& grad) {
                           if (!g.requires_grad(x)) {
                             return;
                           }
                           for (T& v : g.grad_buffer(x).values()) {
                             v += grad[0] / n;
                           }
                         });
}

template <typename T>
Var<T> detach(Var<T> x) {
  return x.graph->constant(x.value());
}

#define SLMREC_INSTANTIATE(T)                                                 \
  template Var<T> matmul<T>(Var<T>, Var<T>, bool);                            \
  template Var<T> batched_matmul<T>(Var<T>, Var<T>, bool);                    \
  template Var<T> add<T>(Var<T>, Var<T>);                                     \
  template Var<T> sub<T>(Var<T>, Var<T>);                                     \
  template Var<T> mul<T>(Var<T>, Var<T>);                                     \
  template Var<T> scale<T>(Var<T>, T);                                        \
  template Var<T> add_scalar<T>(Var<T>, T);                                   \
  template Var<T> silu<T>(Var<T>);                                            \
  template Var<T> softmax_rows<T>(Var<T>);                                    \
  template Var<T> masked_softmax_rows<T>(                                     \
      Var<T>, std::shared_ptr<const std::vector<std::uint8_t>>);              \
  template Var<T> rms_norm<T>(Var<T>, Var<T>, double);                        \
  template Var<T> rope_apply<T>(Var<T>, std::vector<std::int64_t>, double);   \
  template Var<T> split_heads<T>(Var<T>, std::int64_t, std::int64_t,          \
                                 std::int64_t);                               \
  template Var<T> merge_heads<T>(Var<T>, std::int64_t, std::int64_t);         \
  template Var<T> embedding<T>(Var<T>, std::span<const std::int32_t>,         \
                               std::int32_t);                                 \
  template Var<T> prepend_rows<T>(Var<T>, Var<T>, std::int64_t);              \
  template Var<T> gather_rows<T>(Var<T>, std::vector<std::int64_t>);          \
  template Var<T> slice_rows<T>(Var<T>, std::int64_t, std::int64_t);          \
  template Var<T> cross_entropy<T>(Var<T>, std::span<const std::int32_t>);    \
  template Var<T> row_cosine<T>(Var<T>, Var<T>, int*);                        \
  template Var<T> row_squared_distance<T>(Var<T>, Var<T>);                    \
  template Var<T> sum<T>(Var<T>);                                             \
  template Var<T> mean<T>(Var<T>);                                            \
  template Var<T> detach<T>(Var<T>);

SLMREC_INSTANTIATE(float)
SLMREC_INSTANTIATE(double)
#undef SLMREC_INSTANTIATE

}  // namespace slmrec::ops
