#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vuldetect/tensor/tensor.hpp"

namespace vuldetect {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer with bias correction. Moment buffers are bound
/// to the parameter list given at construction, in order.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions options = {})
      : params_(std::move(params)), options_(options) {
    if (!(options_.learning_rate > 0.0)) throw ConfigError("adam: learning rate must be positive");
    if (!(options_.beta1 > 0.0 && options_.beta1 < 1.0) ||
        !(options_.beta2 > 0.0 && options_.beta2 < 1.0)) {
      throw ConfigError("adam: moment decay rates must lie in (0, 1)");
    }
    if (!(options_.epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
    first_.reserve(params_.size());
    second_.reserve(params_.size());
    for (const Var& p : params_) {
      first_.emplace_back(p.size(), 0.0);
      second_.emplace_back(p.size(), 0.0);
    }
  }

  /// Applies one update from the current gradients, then zeroes them.
  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i].has_grad()) {
        throw UsageError("adam: parameter " + std::to_string(i) + " has no gradient");
      }
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double correction1 = 1.0 - std::pow(options_.beta1, t);
    const double correction2 = 1.0 - std::pow(options_.beta2, t);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto w = params_[i].value().data();
      auto g = params_[i].ensure_grad();
      auto& m = first_[i];
      auto& v = second_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * g[j];
        v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * g[j] * g[j];
        const double m_hat = m[j] / correction1;
        const double v_hat = v[j] / correction2;
        w[j] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
      }
      params_[i].zero_grad();
    }
  }

  std::uint64_t step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<double>& first_moment(std::size_t i) const { return first_.at(i); }
  const std::vector<double>& second_moment(std::size_t i) const { return second_.at(i); }

 private:
  std::vector<Var> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::uint64_t step_ = 0;
};

}  // namespace vuldetect
