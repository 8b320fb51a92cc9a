#pragma once

#include <vector>

#include "vuldetect/distill/config.hpp"
#include "vuldetect/tensor/losses.hpp"

namespace vuldetect::distill {

/// Teacher distribution at temperature T, detached from any graph.
inline Tensor soft_targets(const Tensor& teacher_logits, double temperature) {
  return ops::softmax_with_temperature(ops::constant(teacher_logits), temperature).value();
}

/// Mean over rows of D_KL(teacher || softmax(student / T)).
inline Var kd_loss(const Var& student_logits, const Tensor& teacher_probs, double temperature) {
  return ops::kl_divergence(ops::constant(teacher_probs),
                            ops::softmax_with_temperature(student_logits, temperature));
}

struct LossBreakdown {
  double ce = 0.0;
  double kd = 0.0;
  double total = 0.0;
};

/// The scalar combination rule used by total_loss.
inline double combine_losses(double ce, double kd, double temperature, double hard_loss_weight) {
  return hard_loss_weight * ce + temperature * temperature * kd;
}

struct LossTerms {
  Var total;
  LossBreakdown values;
};

/// total = hard_weight * CE(T=1) + T^2 * sum_k w_k * KD_k. With no teachers
/// the KD term is zero.
inline LossTerms total_loss(const Var& student_logits, const std::vector<std::size_t>& labels,
                            const std::vector<Tensor>& teacher_probs,
                            const std::vector<double>& weights, double temperature,
                            double hard_loss_weight) {
  if (weights.size() != teacher_probs.size()) {
    throw ConfigError("total_loss: " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(teacher_probs.size()) + " teachers");
  }
  const Var ce = ops::cross_entropy(student_logits, labels);
  const double t2 = temperature * temperature;
  LossTerms out;
  out.values.ce = ce.item();
  Var total = ops::scale(ce, hard_loss_weight);
  if (!teacher_probs.empty()) {
    Var kd;
    for (std::size_t k = 0; k < teacher_probs.size(); ++k) {
      if (teacher_probs[k].rows() != student_logits.shape()[0]) {
        throw DimensionError("total_loss: teacher " + std::to_string(k) + " has " +
                             std::to_string(teacher_probs[k].rows()) + " rows for a batch of " +
                             std::to_string(student_logits.shape()[0]));
      }
      Var term = ops::scale(kd_loss(student_logits, teacher_probs[k], temperature), weights[k]);
      kd = k == 0 ? term : ops::add(kd, term);
    }
    out.values.kd = kd.item();
    total = ops::add(total, ops::scale(kd, t2));
  }
  out.values.total = total.item();
  out.total = total;
  return out;
}

inline LossTerms total_loss(const Var& student_logits, const std::vector<std::size_t>& labels,
                            const std::vector<Tensor>& teacher_probs, const DistillConfig& config) {
  return total_loss(student_logits, labels, teacher_probs,
                    config.resolved_weights(teacher_probs.size()), config.temperature,
                    config.hard_loss_weight);
}

}  // namespace vuldetect::distill
