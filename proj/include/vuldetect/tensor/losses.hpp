#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "vuldetect/tensor/ops.hpp"

namespace vuldetect::ops {

namespace detail {

inline void require_logit_matrix(const Var& logits, const char* op) {
  if (!logits.defined() || logits.size() == 0) {
    throw DimensionError(std::string(op) + ": empty tensor");
  }
  require_matrix(logits, op);
  if (logits.shape()[1] < 2) {
    throw DimensionError(std::string(op) + ": need at least two classes, got shape " +
                         shape_string(logits.shape()));
  }
}

inline void require_stochastic_rows(const Tensor& t, const char* what) {
  const std::size_t n = t.rows(), c = t.cols();
  for (std::size_t r = 0; r < n; ++r) {
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double v = t.at(r, j);
      if (!(v >= 0.0)) {
        throw DomainError(std::string(what) + ": negative or NaN probability in row " +
                          std::to_string(r));
      }
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw DomainError(std::string(what) + ": row " + std::to_string(r) + " sums to " +
                        std::to_string(total));
    }
  }
}

}  // namespace detail

/// Row-wise softmax of logits / temperature with max subtraction.
inline Var softmax_with_temperature(const Var& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw DomainError("softmax_with_temperature: temperature must be positive, got " +
                      std::to_string(temperature));
  }
  detail::require_logit_matrix(logits, "softmax_with_temperature");
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  Tensor out(logits.shape());
  const auto z = logits.value().data();
  auto y = out.data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = z.data() + r * c;
    const double max_z = *std::max_element(row, row + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      y[r * c + j] = std::exp((row[j] - max_z) / temperature);
      total += y[r * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) y[r * c + j] /= total;
  }
  Var result(std::move(out));
  if (GradTape* tape = detail::recording_tape({&logits})) {
    tape->record(result, [logits, result, n, c, temperature]() mutable {
      if (!result.has_grad()) return;
      const auto g = result.grad();
      const auto y = result.value().data();
      auto gz = logits.ensure_grad();
      for (std::size_t r = 0; r < n; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += g[r * c + j] * y[r * c + j];
        for (std::size_t j = 0; j < c; ++j) {
          gz[r * c + j] += y[r * c + j] * (g[r * c + j] - dot) / temperature;
        }
      }
    });
  }
  return result;
}

inline Var softmax(const Var& logits) { return softmax_with_temperature(logits, 1.0); }

/// Mean negative log-likelihood of `labels` under softmax(logits), via
/// log-sum-exp.
inline Var cross_entropy(const Var& logits, const std::vector<std::size_t>& labels) {
  detail::require_logit_matrix(logits, "cross_entropy");
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  if (labels.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] >= c) {
      throw IndexError("cross_entropy: label " + std::to_string(labels[r]) + " at row " +
                       std::to_string(r) + " outside [0, " + std::to_string(c) + ")");
    }
  }
  const auto z = logits.value().data();
  std::vector<double> log_norm(n);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = z.data() + r * c;
    const double max_z = *std::max_element(row, row + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - max_z);
    log_norm[r] = max_z + std::log(s);
    total += log_norm[r] - row[labels[r]];
  }
  Var result(Tensor::scalar(total / static_cast<double>(n)));
  if (GradTape* tape = detail::recording_tape({&logits})) {
    tape->record(result, [logits, result, labels, log_norm = std::move(log_norm), n, c]() mutable {
      if (!result.has_grad()) return;
      const double g = result.grad()[0] / static_cast<double>(n);
      const auto z = logits.value().data();
      auto gz = logits.ensure_grad();
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < c; ++j) {
          const double p = std::exp(z[r * c + j] - log_norm[r]);
          gz[r * c + j] += g * (p - (j == labels[r] ? 1.0 : 0.0));
        }
      }
    });
  }
  return result;
}

/// (1/n) * sum over rows of KL(p_row || q_row), with 0 * ln(0 / q) = 0.
inline Var kl_divergence(const Var& p, const Var& q) {
  detail::require_same_shape(p, q, "kl_divergence");
  detail::require_logit_matrix(p, "kl_divergence");
  detail::require_stochastic_rows(p.value(), "kl_divergence (p)");
  detail::require_stochastic_rows(q.value(), "kl_divergence (q)");
  const std::size_t n = p.shape()[0], c = p.shape()[1];
  const auto pv = p.value().data();
  const auto qv = q.value().data();
  double total = 0.0;
  for (std::size_t i = 0; i < n * c; ++i) {
    if (pv[i] == 0.0) continue;
    if (qv[i] == 0.0) {
      throw DomainError("kl_divergence: q is zero where p is positive (row " +
                        std::to_string(i / c) + ", column " + std::to_string(i % c) + ")");
    }
    total += pv[i] * std::log(pv[i] / qv[i]);
  }
  Var result(Tensor::scalar(total / static_cast<double>(n)));
  if (GradTape* tape = detail::recording_tape({&p, &q})) {
    tape->record(result, [p, q, result, n, c]() mutable {
      if (!result.has_grad()) return;
      const double g = result.grad()[0] / static_cast<double>(n);
      const auto pv = p.value().data();
      const auto qv = q.value().data();
      if (q.requires_grad()) {
        auto gq = q.ensure_grad();
        for (std::size_t i = 0; i < n * c; ++i) {
          if (pv[i] != 0.0) gq[i] -= g * pv[i] / qv[i];
        }
      }
      if (p.requires_grad()) {
        // The derivative diverges at p = 0; those entries get no gradient.
        auto gp = p.ensure_grad();
        for (std::size_t i = 0; i < n * c; ++i) {
          if (pv[i] != 0.0) gp[i] += g * (std::log(pv[i] / qv[i]) + 1.0);
        }
      }
    });
  }
  return result;
}

/// Shannon entropy (natural log) of each row of a row-stochastic matrix.
inline std::vector<double> row_entropy(const Tensor& probs) {
  std::vector<double> out(probs.rows(), 0.0);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      const double v = probs.at(r, j);
      if (v > 0.0) out[r] -= v * std::log(v);
    }
  }
  return out;
}

inline Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
  if (labels.empty()) throw DimensionError("one_hot: no labels");
  Tensor out({labels.size(), classes});
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= classes) throw IndexError("one_hot: label out of range");
    out.at(r, labels[r]) = 1.0;
  }
  return out;
}

}  // namespace vuldetect::ops
