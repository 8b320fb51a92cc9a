#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vuldetect/errors.hpp"

namespace vuldetect::distill {

struct DistillConfig {
  double temperature = 3.0;
  std::vector<std::string> teacher_checkpoints;
  std::vector<double> teacher_weights;  // empty means uniform
  double hard_loss_weight = 1.0;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  bool operator==(const DistillConfig&) const = default;

  /// Per-teacher weights for `teachers` teachers, uniform when unset.
  std::vector<double> resolved_weights(std::size_t teachers) const {
    if (teacher_weights.empty()) {
      return std::vector<double>(teachers, teachers == 0 ? 0.0 : 1.0 / static_cast<double>(teachers));
    }
    if (teacher_weights.size() != teachers) {
      throw ConfigError("teacher_weights has " + std::to_string(teacher_weights.size()) +
                        " entries for " + std::to_string(teachers) + " teachers");
    }
    double total = 0.0;
    for (double w : teacher_weights) {
      if (!(w >= 0.0)) throw ConfigError("teacher_weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ConfigError("teacher_weights must sum to 1, got " + std::to_string(total));
    }
    return teacher_weights;
  }

  void validate() const {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (!(hard_loss_weight >= 0.0)) throw ConfigError("hard_loss_weight must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!teacher_weights.empty()) resolved_weights(teacher_weights.size());
  }
};

inline nlohmann::json to_json(const DistillConfig& c) {
  return {{"temperature", c.temperature},
          {"teacher_checkpoints", c.teacher_checkpoints},
          {"teacher_weights", c.teacher_weights},
          {"hard_loss_weight", c.hard_loss_weight},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed}};
}

/// Strict parse: every key must be a DistillConfig field name.
inline DistillConfig distill_config_from_json(const nlohmann::json& j, DistillConfig c = {}) {
  if (!j.is_object()) throw ConfigError("distill: expected an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "temperature") c.temperature = value.get<double>();
      else if (key == "teacher_checkpoints") c.teacher_checkpoints = value.get<std::vector<std::string>>();
      else if (key == "teacher_weights") c.teacher_weights = value.get<std::vector<double>>();
      else if (key == "hard_loss_weight") c.hard_loss_weight = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ConfigError("distill: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("distill: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace vuldetect::distill
