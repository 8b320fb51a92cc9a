#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vuldetect/tensor/tensor.hpp"

namespace vuldetect::ops {

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

inline ConstMap as_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return ConstMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline MutMap as_matrix(std::span<double> data, std::size_t rows, std::size_t cols) {
  return MutMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

/// The tape to record on, or null when no input needs a gradient.
inline GradTape* recording_tape(std::initializer_list<const Var*> inputs) {
  GradTape* tape = GradTape::active();
  if (tape == nullptr) return nullptr;
  for (const Var* v : inputs) {
    if (v->requires_grad()) return tape;
  }
  return nullptr;
}

inline void require_matrix(const Var& v, const char* op) {
  if (v.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " +
                         shape_string(v.shape()));
  }
}

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

/// Length of the trailing axis; bias vectors may be rank 1 or [1, d].
inline std::size_t vector_length(const Var& v) {
  const auto& s = v.shape();
  if (s.size() == 1) return s[0];
  if (s.size() == 2 && s[0] == 1) return s[1];
  throw DimensionError("expected a vector, got shape " + shape_string(s));
}

// About twice as fast as std::tanh; absolute error stays near 1e-16.
inline double tanh_via_exp(double u) {
  const double e = std::exp(-2.0 * std::abs(u));
  return std::copysign((1.0 - e) / (1.0 + e), u);
}

template <typename Fn, typename Deriv>
Var unary_elementwise(const Var& x, Fn fn, Deriv deriv) {
  Tensor out(x.shape());
  const auto in = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = fn(in[i]);
  Var result(std::move(out));
  if (GradTape* tape = recording_tape({&x})) {
    tape->record(result, [x, result, deriv]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      const auto in = x.value().data();
      const auto y = result.value().data();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(in[i], y[i]);
    });
  }
  return result;
}

}  // namespace detail

/// Wraps a value as a graph constant.
inline Var constant(Tensor value) { return Var(std::move(value), false); }

inline Var matmul(const Var& a, const Var& b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  Tensor out({m, n});
  detail::as_matrix(out.data(), m, n).noalias() =
      detail::as_matrix(a.value().data(), m, k) * detail::as_matrix(b.value().data(), k, n);
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&a, &b})) {
    tape->record(result, [a, b, result, m, k, n]() mutable {
      if (!result.has_grad()) return;
      const auto g = detail::as_matrix(result.grad(), m, n);
      if (a.requires_grad()) {
        detail::as_matrix(a.ensure_grad(), m, k).noalias() +=
            g * detail::as_matrix(b.value().data(), k, n).transpose();
      }
      if (b.requires_grad()) {
        detail::as_matrix(b.ensure_grad(), k, n).noalias() +=
            detail::as_matrix(a.value().data(), m, k).transpose() * g;
      }
    });
  }
  return result;
}

inline Var add(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "add");
  Tensor out(a.shape());
  const auto x = a.value().data();
  const auto y = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&a, &b})) {
    tape->record(result, [a, b, result]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      for (const Var* v : {&a, &b}) {
        if (!v->requires_grad()) continue;
        auto gv = v->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
      }
    });
  }
  return result;
}

inline Var sub(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  const auto x = a.value().data();
  const auto y = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&a, &b})) {
    tape->record(result, [a, b, result]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      if (a.requires_grad()) {
        auto ga = a.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return result;
}

/// Element-wise (Hadamard) product.
inline Var mul(const Var& a, const Var& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  const auto x = a.value().data();
  const auto y = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&a, &b})) {
    tape->record(result, [a, b, result]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      const auto x = a.value().data();
      const auto y = b.value().data();
      if (a.requires_grad()) {
        auto ga = a.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
      }
      if (b.requires_grad()) {
        auto gb = b.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
      }
    });
  }
  return result;
}

inline Var scale(const Var& a, double factor) {
  return detail::unary_elementwise(
      a, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

/// x[n, d] + bias[d] broadcast over rows.
inline Var add_bias(const Var& x, const Var& bias) {
  detail::require_matrix(x, "add_bias");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (detail::vector_length(bias) != d) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) +
                         " does not match columns of " + shape_string(x.shape()));
  }
  Tensor out(x.shape());
  const auto in = x.value().data();
  const auto b = bias.value().data();
  auto o = out.data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) o[r * d + c] = in[r * d + c] + b[c];
  }
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&x, &bias})) {
    tape->record(result, [x, bias, result, n, d]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      if (x.requires_grad()) {
        auto gx = x.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.ensure_grad();
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
        }
      }
    });
  }
  return result;
}

/// Sum of all entries as a [1] tensor.
inline Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  Var result(Tensor::scalar(total));
  if (GradTape* tape = detail::recording_tape({&x})) {
    tape->record(result, [x, result]() mutable {
      if (!result.has_grad()) return;
      const double g = result.grad()[0];
      for (double& gx : x.ensure_grad()) gx += g;
    });
  }
  return result;
}

inline Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

/// GELU, tanh approximation (GPT-2 variant).
inline Var gelu(const Var& x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double c = 0.044715;
  const auto in = x.value().data();
  std::vector<double> t(in.size());
  Tensor out(x.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = in[i];
    t[i] = detail::tanh_via_exp(k * (v + c * v * v * v));
    o[i] = 0.5 * v * (1.0 + t[i]);
  }
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&x})) {
    tape->record(result, [x, result, t = std::move(t)]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      const auto in = x.value().data();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = in[i];
        const double dinner = k * (1.0 + 3.0 * c * v * v);
        gx[i] += g[i] * (0.5 * (1.0 + t[i]) + 0.5 * v * (1.0 - t[i] * t[i]) * dinner);
      }
    });
  }
  return result;
}

inline Var sigmoid(const Var& x) {
  return detail::unary_elementwise(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(const Var& x) {
  return detail::unary_elementwise(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

/// Row-wise layer normalization with learned gain and shift over the last axis.
inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5) {
  detail::require_matrix(x, "layer_norm");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (detail::vector_length(gamma) != d || detail::vector_length(beta) != d) {
    throw DimensionError("layer_norm: gain/shift length does not match " +
                         shape_string(x.shape()));
  }
  Tensor out(x.shape());
  std::vector<double> normalized(n * d);
  std::vector<double> inv_std(n);
  const auto in = x.value().data();
  const auto gm = gamma.value().data();
  const auto bt = beta.value().data();
  auto o = out.data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = in.data() + r * d;
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += row[c];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + eps);
    inv_std[r] = rs;
    for (std::size_t c = 0; c < d; ++c) {
      const double xh = (row[c] - mu) * rs;
      normalized[r * d + c] = xh;
      o[r * d + c] = xh * gm[c] + bt[c];
    }
  }
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&x, &gamma, &beta})) {
    tape->record(result, [x, gamma, beta, result, normalized = std::move(normalized),
                          inv_std = std::move(inv_std), n, d]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      const auto gm = gamma.value().data();
      if (gamma.requires_grad() || beta.requires_grad()) {
        std::span<double> gg = gamma.requires_grad() ? gamma.ensure_grad() : std::span<double>{};
        std::span<double> gb = beta.requires_grad() ? beta.ensure_grad() : std::span<double>{};
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < d; ++c) {
            if (!gg.empty()) gg[c] += g[r * d + c] * normalized[r * d + c];
            if (!gb.empty()) gb[c] += g[r * d + c];
          }
        }
      }
      if (x.requires_grad()) {
        auto gx = x.ensure_grad();
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t r = 0; r < n; ++r) {
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double dxh = g[r * d + c] * gm[c];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * normalized[r * d + c];
          }
          mean_dxh *= inv_d;
          mean_dxh_xh *= inv_d;
          for (std::size_t c = 0; c < d; ++c) {
            const double dxh = g[r * d + c] * gm[c];
            gx[r * d + c] +=
                inv_std[r] * (dxh - mean_dxh - normalized[r * d + c] * mean_dxh_xh);
          }
        }
      }
    });
  }
  return result;
}

/// Gathers rows of `table` by index: result[i] = table[indices[i]].
inline Var gather_rows(const Var& table, std::vector<std::size_t> indices) {
  detail::require_matrix(table, "gather_rows");
  const std::size_t rows = table.shape()[0], d = table.shape()[1];
  if (indices.empty()) throw DimensionError("gather_rows: empty index list");
  Tensor out({indices.size(), d});
  const auto src = table.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw IndexError("gather_rows: index " + std::to_string(indices[i]) +
                       " out of range for " + std::to_string(rows) + " rows");
    }
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(indices[i] * d), d,
                o.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&table})) {
    tape->record(result, [table, result, indices = std::move(indices), d]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      auto gt = table.ensure_grad();
      for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) gt[indices[i] * d + c] += g[i * d + c];
      }
    });
  }
  return result;
}

/// Embedding lookup; same as gather_rows over the embedding table.
inline Var embedding(const Var& table, std::vector<std::size_t> ids) {
  return gather_rows(table, std::move(ids));
}

/// Columns [start, start + count) of a matrix.
inline Var slice_cols(const Var& x, std::size_t start, std::size_t count) {
  detail::require_matrix(x, "slice_cols");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (count == 0 || start + count > d) {
    throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") outside " + shape_string(x.shape()));
  }
  Tensor out({n, count});
  const auto in = x.value().data();
  auto o = out.data();
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(r * d + start), count,
                o.begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&x})) {
    tape->record(result, [x, result, n, d, start, count]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      auto gx = x.ensure_grad();
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < count; ++c) gx[r * d + start + c] += g[r * count + c];
      }
    });
  }
  return result;
}

/// Row-wise choice: result[r] = take_first[r] ? first[r] : second[r].
inline Var select_rows(const std::vector<bool>& take_first, const Var& first, const Var& second) {
  detail::require_same_shape(first, second, "select_rows");
  detail::require_matrix(first, "select_rows");
  const std::size_t n = first.shape()[0], d = first.shape()[1];
  if (take_first.size() != n) {
    throw DimensionError("select_rows: mask length " + std::to_string(take_first.size()) +
                         " does not match " + std::to_string(n) + " rows");
  }
  Tensor out(first.shape());
  auto o = out.data();
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = (take_first[r] ? first : second).value().data();
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * d), d,
                o.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&first, &second})) {
    tape->record(result, [take_first, first, second, result, n, d]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      for (std::size_t r = 0; r < n; ++r) {
        const Var& target = take_first[r] ? first : second;
        if (!target.requires_grad()) continue;
        auto gt = target.ensure_grad();
        for (std::size_t c = 0; c < d; ++c) gt[r * d + c] += g[r * d + c];
      }
    });
  }
  return result;
}

/// Inverted dropout. `rate` in [0, 1); rate 0 returns the input unchanged.
inline Var dropout(const Var& x, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw DomainError("dropout: rate must lie in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = uniform(rng) < rate ? 0.0 : keep_scale;
  Tensor out(x.shape());
  const auto in = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * mask[i];
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&x})) {
    tape->record(result, [x, result, mask = std::move(mask)]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
  }
  return result;
}

/// Multi-head causal self-attention over packed sequences.
///
/// `qkv` is [batch * seq_len, 3 * d_model], rows grouped by sequence, columns
/// laid out as [queries | keys | values]. Query position i attends to key
/// positions j <= i with j < lengths[b]; keys at or beyond a sequence's length
/// are padding and never visible. Returns [batch * seq_len, d_model].
inline Var causal_self_attention(const Var& qkv, std::size_t batch, std::size_t seq_len,
                                 std::size_t n_heads, const std::vector<std::size_t>& lengths) {
  detail::require_matrix(qkv, "causal_self_attention");
  if (qkv.shape()[0] != batch * seq_len || qkv.shape()[1] % 3 != 0) {
    throw DimensionError("causal_self_attention: qkv shape " + shape_string(qkv.shape()) +
                         " inconsistent with batch " + std::to_string(batch) + " x seq " +
                         std::to_string(seq_len));
  }
  const std::size_t d = qkv.shape()[1] / 3;
  if (n_heads == 0 || d % n_heads != 0) {
    throw DimensionError("causal_self_attention: d_model not divisible by head count");
  }
  if (lengths.size() != batch) {
    throw DimensionError("causal_self_attention: one length per sequence required");
  }
  for (std::size_t len : lengths) {
    if (len == 0 || len > seq_len) {
      throw DimensionError("causal_self_attention: sequence length out of range");
    }
  }
  const std::size_t hd = d / n_heads;
  const std::size_t stride = 3 * d;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));

  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Block = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;
  using MutBlock = Eigen::Map<Mat, 0, Eigen::OuterStride<>>;
  const auto L = static_cast<Eigen::Index>(seq_len);
  const auto HD = static_cast<Eigen::Index>(hd);
  auto part = [&](const double* base, std::size_t b, std::size_t offset) {
    return Block(base + b * seq_len * stride + offset, L, HD,
                 Eigen::OuterStride<>(static_cast<Eigen::Index>(stride)));
  };

  // Attention weights for the backward pass, one [seq_len x seq_len] block
  // per (sequence, head); invisible entries are exactly zero.
  std::vector<double> weights(batch * n_heads * seq_len * seq_len, 0.0);
  Tensor out({batch * seq_len, d});
  const double* in = qkv.value().data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      Eigen::Map<Mat> w(weights.data() + (b * n_heads + h) * seq_len * seq_len, L, L);
      w.noalias() = part(in, b, h * hd) * part(in, b, d + h * hd).transpose();
      for (std::size_t i = 0; i < seq_len; ++i) {
        const std::size_t visible = std::min(i + 1, lengths[b]);
        double* row = &w(static_cast<Eigen::Index>(i), 0);
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < visible; ++j) {
          row[j] *= inv_sqrt;
          max_score = std::max(max_score, row[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < visible; ++j) {
          row[j] = std::exp(row[j] - max_score);
          total += row[j];
        }
        for (std::size_t j = 0; j < visible; ++j) row[j] /= total;
        std::fill(row + visible, row + seq_len, 0.0);
      }
      MutBlock(out.data().data() + b * seq_len * d + h * hd, L, HD,
               Eigen::OuterStride<>(static_cast<Eigen::Index>(d)))
          .noalias() = w * part(in, b, 2 * d + h * hd);
    }
  }
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&qkv})) {
    tape->record(result, [qkv, result, weights = std::move(weights), batch, seq_len, n_heads,
                          d, hd, stride, inv_sqrt, L, HD]() mutable {
      if (!result.has_grad()) return;
      const double* g = result.grad().data();
      const double* in = qkv.value().data().data();
      double* gin = qkv.ensure_grad().data();
      auto block = [&](const double* base, std::size_t b, std::size_t offset, std::size_t ld) {
        return Block(base + b * seq_len * ld + offset, L, HD,
                     Eigen::OuterStride<>(static_cast<Eigen::Index>(ld)));
      };
      auto mut = [&](double* base, std::size_t b, std::size_t offset) {
        return MutBlock(base + b * seq_len * stride + offset, L, HD,
                        Eigen::OuterStride<>(static_cast<Eigen::Index>(stride)));
      };
      Mat dw(L, L);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < n_heads; ++h) {
          Eigen::Map<const Mat> w(weights.data() + (b * n_heads + h) * seq_len * seq_len, L, L);
          const auto go = block(g, b, h * hd, d);
          const auto q = block(in, b, h * hd, stride);
          const auto k = block(in, b, d + h * hd, stride);
          const auto v = block(in, b, 2 * d + h * hd, stride);
          mut(gin, b, 2 * d + h * hd).noalias() += w.transpose() * go;
          dw.noalias() = go * v.transpose();
          // softmax backward; zero weights keep masked entries at zero
          const Eigen::VectorXd weighted = w.cwiseProduct(dw).rowwise().sum();
          dw = (w.array() * (dw.colwise() - weighted).array() * inv_sqrt).matrix();
          mut(gin, b, h * hd).noalias() += dw * k;
          mut(gin, b, d + h * hd).noalias() += dw.transpose() * q;
        }
      }
    });
  }
  return result;
}

}  // namespace vuldetect::ops
