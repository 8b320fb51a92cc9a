#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "vuldetect/codeprep/pipeline.hpp"
#include "vuldetect/data/split.hpp"
#include "vuldetect/distill/config.hpp"
#include "vuldetect/models/classifier.hpp"
#include "vuldetect/tensor/optim.hpp"

namespace vuldetect::eval {

using ModelConfig = std::variant<models::TransformerConfig, models::LSTMConfig>;

/// Dataset handling knobs that are not part of the split itself.
struct DataOptions {
  bool oversample = false;  // balance the training split by oversampling the minority class
  std::optional<std::string> vocab;  // built from the training split when unset
  std::size_t vocab_max_size = 5000;
  std::size_t vocab_min_freq = 1;

  bool operator==(const DataOptions&) const = default;
};

/// Everything a training run depends on. `run` holds what the command was
/// invoked with (paths, seed override); it is recorded, never read back as a knob.
struct RunConfig {
  ModelConfig model = models::TransformerConfig{};
  distill::DistillConfig distill;
  data::SplitConfig split;
  DataOptions data;
  codeprep::PreprocessOptions preprocess;
  AdamOptions optimizer;  // learning_rate comes from distill
  nlohmann::json run = nlohmann::json::object();

  bool operator==(const RunConfig& o) const {
    return model == o.model && distill == o.distill && split == o.split && data == o.data &&
           preprocess == o.preprocess && optimizer.beta1 == o.optimizer.beta1 &&
           optimizer.beta2 == o.optimizer.beta2 && optimizer.epsilon == o.optimizer.epsilon &&
           run == o.run;
  }
};

inline std::string architecture_of(const ModelConfig& m) {
  return std::holds_alternative<models::TransformerConfig>(m) ? "transformer" : "lstm";
}

inline nlohmann::json model_config_json(const ModelConfig& m) {
  return std::visit([](const auto& c) { return models::to_json(c); }, m);
}

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"model", {{"architecture", architecture_of(c.model)}, {"config", model_config_json(c.model)}}},
          {"distill", distill::to_json(c.distill)},
          {"split", data::to_json(c.split)},
          {"data",
           {{"oversample", c.data.oversample},
            {"vocab", c.data.vocab ? nlohmann::json(*c.data.vocab) : nlohmann::json()},
            {"vocab_max_size", c.data.vocab_max_size},
            {"vocab_min_freq", c.data.vocab_min_freq}}},
          {"preprocess", codeprep::to_json(c.preprocess)},
          {"optimizer",
           {{"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2}, {"epsilon", c.optimizer.epsilon}}},
          {"run", c.run}};
}

namespace detail {

inline void only_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                      const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline ModelConfig model_from_json(const nlohmann::json& j) {
  only_keys(j, {"architecture", "config"}, "model");
  const std::string arch = j.value("architecture", std::string("transformer"));
  const nlohmann::json cfg = j.value("config", nlohmann::json::object());
  ModelConfig m;
  if (arch == "transformer") m = models::transformer_config_from_json(cfg);
  else if (arch == "lstm") m = models::lstm_config_from_json(cfg);
  else throw ConfigError("model.architecture must be transformer or lstm, got '" + arch + "'");
  // vocab_size may stay 0 until the vocabulary is known
  std::visit([](auto c) {
    if (c.vocab_size == 0) c.vocab_size = 1;
    c.validate();
  }, m);
  return m;
}

}  // namespace detail

/// Strict parse. Missing sections and keys keep their defaults.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  detail::only_keys(j, {"model", "distill", "split", "data", "preprocess", "optimizer", "run"}, "config");
  RunConfig c;
  try {
    if (j.contains("model")) c.model = detail::model_from_json(j["model"]);
    if (j.contains("distill")) c.distill = distill::distill_config_from_json(j["distill"]);
    if (j.contains("split")) c.split = data::split_config_from_json(j["split"]);
    if (j.contains("data")) {
      const auto& d = j["data"];
      detail::only_keys(d, {"oversample", "vocab", "vocab_max_size", "vocab_min_freq"}, "data");
      c.data.oversample = d.value("oversample", c.data.oversample);
      if (d.contains("vocab") && !d["vocab"].is_null()) c.data.vocab = d["vocab"].get<std::string>();
      c.data.vocab_max_size = d.value("vocab_max_size", c.data.vocab_max_size);
      c.data.vocab_min_freq = d.value("vocab_min_freq", c.data.vocab_min_freq);
    }
    if (j.contains("preprocess")) c.preprocess = codeprep::preprocess_options_from_json(j["preprocess"]);
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      detail::only_keys(o, {"beta1", "beta2", "epsilon"}, "optimizer");
      c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
      c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
      c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
    }
    if (j.contains("run")) {
      if (!j["run"].is_object()) throw ConfigError("run: expected an object");
      c.run = j["run"];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.split.validate();
  c.distill.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

inline void write_canonical_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

/// Sets every seed in the config to `seed` and records that it happened.
inline void apply_seed_override(RunConfig& c, std::uint64_t seed) {
  std::visit([&](auto& m) { m.seed = seed; }, c.model);
  c.distill.seed = seed;
  c.split.seed = seed;
  c.run["seed_override"] = seed;
}

/// VULDETECT_SEED as an integer, if set. Anything else is a usage error.
inline std::optional<std::uint64_t> seed_from_environment() {
  const char* raw = std::getenv("VULDETECT_SEED");
  if (raw == nullptr) return std::nullopt;
  const std::string s(raw);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 19) {
    throw UsageError("VULDETECT_SEED must be a non-negative integer, got '" + s + "'");
  }
  return std::stoull(s);
}

}  // namespace vuldetect::eval
