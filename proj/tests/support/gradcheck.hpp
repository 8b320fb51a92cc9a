#pragma once

// Central finite-difference oracle for tape gradients. Test-only; it touches
// nothing but parameter values and a scalar loss callback.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vuldetect/tensor/tensor.hpp"

namespace vuldetect::testing {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // "param[i] entry j"
  std::size_t checked = 0;
};

/// Relative error with a floor of 1e-2 on the denominator, so entries whose
/// true gradient is near zero are judged on absolute error instead.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
  return std::abs(analytic - numeric) / denom;
}

/// `loss` must build a scalar from `params` using the active tape if any.
/// Entries are visited with the given stride to bound runtime on big models.
inline GradCheckResult check_gradients(std::vector<Var> params,
                                       const std::function<Var()>& loss,
                                       double h = 1e-5, std::size_t stride = 1) {
  for (Var& p : params) p.value().drop_grad();
  {
    GradTape tape;
    Var out;
    {
      GradTape::Scope scope(tape);
      out = loss();
    }
    tape.backward(out);
  }
  std::vector<std::vector<double>> analytic;
  for (Var& p : params) {
    if (p.has_grad()) {
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      analytic.emplace_back(p.size(), 0.0);
    }
  }

  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].value().data();
    for (std::size_t j = 0; j < values.size(); j += stride) {
      const double saved = values[j];
      values[j] = saved + h;
      const double up = loss().item();
      values[j] = saved - h;
      const double down = loss().item();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[i][j], numeric);
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst = "param[" + std::to_string(i) + "] entry " + std::to_string(j);
      }
    }
  }
  return result;
}

}  // namespace vuldetect::testing
