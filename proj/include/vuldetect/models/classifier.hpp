#pragma once

#include <string>
#include <variant>
#include <vector>

#include "vuldetect/models/lstm.hpp"
#include "vuldetect/models/transformer.hpp"
#include "vuldetect/tensor/losses.hpp"

namespace vuldetect::models {

using AnyClassifier = std::variant<TransformerClassifier, LSTMClassifier>;

inline Var forward(const AnyClassifier& model, const std::vector<TokenSequence>& batch,
                   const ForwardOptions& opts = {}) {
  return std::visit([&](const auto& m) { return m.forward(batch, opts); }, model);
}

inline const ParameterSet& parameters(const AnyClassifier& model) {
  return std::visit([](const auto& m) -> const ParameterSet& { return m.parameters(); }, model);
}

inline std::size_t max_len(const AnyClassifier& model) {
  return std::visit([](const auto& m) { return m.max_len(); }, model);
}

inline std::string architecture(const AnyClassifier& model) {
  return std::holds_alternative<TransformerClassifier>(model) ? "transformer" : "lstm";
}

inline nlohmann::json config_json(const AnyClassifier& model) {
  return std::visit([](const auto& m) { return to_json(m.config()); }, model);
}

/// Builds a freshly initialized model from an architecture name and config.
inline AnyClassifier make_classifier(const std::string& arch, const nlohmann::json& config) {
  if (arch == "transformer") return TransformerClassifier(transformer_config_from_json(config));
  if (arch == "lstm") return LSTMClassifier(lstm_config_from_json(config));
  throw ConfigError("unknown architecture '" + arch + "' (expected transformer or lstm)");
}

/// Flat copy of every parameter value, in checkpoint order.
inline std::vector<double> flat_parameters(const AnyClassifier& model) {
  std::vector<double> out;
  for (const auto& p : parameters(model).entries()) {
    const auto& v = p.var.value().values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

/// Argmax with ties resolved toward the lower label (0 = not vulnerable).
inline int argmax_label(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return static_cast<int>(best);
}

inline std::vector<Prediction> predictions_from_logits(const Tensor& logits) {
  const Var probs = ops::softmax(ops::constant(logits));
  const std::size_t n = logits.rows(), c = logits.cols();
  std::vector<Prediction> out(n);
  const auto l = logits.data();
  const auto p = probs.value().data();
  for (std::size_t r = 0; r < n; ++r) {
    out[r].label = argmax_label(l.subspan(r * c, c));
    out[r].probabilities.assign(p.begin() + static_cast<std::ptrdiff_t>(r * c),
                                p.begin() + static_cast<std::ptrdiff_t>((r + 1) * c));
  }
  return out;
}

inline Prediction predict(const AnyClassifier& model, const TokenSequence& seq) {
  return predictions_from_logits(forward(model, {seq}).value()).front();
}

/// Predicted labels over a dataset, evaluated in chunks without a tape.
inline std::vector<int> predict_labels(const AnyClassifier& model,
                                       const std::vector<TokenSequence>& data,
                                       std::size_t chunk = 64) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t end = std::min(data.size(), start + chunk);
    const std::vector<TokenSequence> batch(data.begin() + static_cast<std::ptrdiff_t>(start),
                                           data.begin() + static_cast<std::ptrdiff_t>(end));
    for (const auto& p : predictions_from_logits(forward(model, batch).value())) {
      labels.push_back(p.label);
    }
  }
  return labels;
}

}  // namespace vuldetect::models
