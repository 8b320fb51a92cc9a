#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vuldetect/codeprep/vocab.hpp"
#include "vuldetect/errors.hpp"
#include "vuldetect/tensor/ops.hpp"

namespace vuldetect::models {

using codeprep::TokenSequence;

struct NamedParam {
  std::string name;
  Var var;
};

/// Ordered, named parameter list. Order is the checkpoint order.
class ParameterSet {
 public:
  Var add(std::string name, Tensor value) {
    Var v = Var::parameter(std::move(value));
    params_.push_back({std::move(name), v});
    return v;
  }

  const std::vector<NamedParam>& entries() const { return params_; }
  std::size_t size() const { return params_.size(); }

  std::vector<Var> vars() const {
    std::vector<Var> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.var);
    return out;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.var.size();
    return n;
  }

  /// Deep copy of values into fresh parameter nodes.
  ParameterSet clone() const {
    ParameterSet out;
    for (const auto& p : params_) out.add(p.name, Tensor(p.var.shape(), p.var.value().values()));
    return out;
  }

 private:
  std::vector<NamedParam> params_;
};

/// Draws N(0, std^2) entries in row-major order from `rng`.
inline Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline Var linear(const Var& x, const Var& weight, const Var& bias) {
  return ops::add_bias(ops::matmul(x, weight), bias);
}

/// Options for a forward pass. Dropout is active only when an rng is given.
struct ForwardOptions {
  std::mt19937_64* dropout_rng = nullptr;
};

/// Rejects batches that do not match the model's sequence length or vocab.
inline void check_batch(const std::vector<TokenSequence>& batch, std::size_t max_len,
                        std::size_t vocab_size, const char* who) {
  if (batch.empty()) throw DimensionError(std::string(who) + ": empty batch");
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b];
    if (s.ids.size() != max_len) {
      throw DimensionError(std::string(who) + ": sequence " + std::to_string(b) + " has length " +
                           std::to_string(s.ids.size()) + ", model expects " +
                           std::to_string(max_len));
    }
    if (s.true_length < 1 || s.true_length > max_len) {
      throw DimensionError(std::string(who) + ": sequence " + std::to_string(b) +
                           " has true_length " + std::to_string(s.true_length));
    }
    for (std::size_t t = 0; t < s.true_length; ++t) {
      if (s.ids[t] >= vocab_size) {
        throw IndexError(std::string(who) + ": token id " + std::to_string(s.ids[t]) +
                         " outside vocabulary of " + std::to_string(vocab_size));
      }
    }
  }
}

inline std::size_t longest(const std::vector<TokenSequence>& batch) {
  std::size_t n = 0;
  for (const auto& s : batch) n = std::max(n, s.true_length);
  return n;
}

namespace detail {

template <class T>
T get_field(const nlohmann::json& j, const char* key, const char* where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(where) + ": missing or invalid '" + key + "'");
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

}  // namespace vuldetect::models
