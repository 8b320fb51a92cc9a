#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vuldetect/models/params.hpp"

namespace vuldetect::models {

struct LSTMConfig {
  std::size_t vocab_size = 0;
  std::size_t d_embed = 64;
  std::size_t d_hidden = 64;
  std::size_t max_len = 256;
  std::size_t n_classes = 2;
  std::uint64_t seed = 0;

  bool operator==(const LSTMConfig&) const = default;

  void validate() const {
    if (vocab_size == 0 || d_embed == 0 || d_hidden == 0 || max_len == 0) {
      throw ConfigError("lstm: vocab_size, d_embed, d_hidden and max_len must be positive");
    }
    if (n_classes < 2) throw ConfigError("lstm.n_classes must be at least 2");
  }
};

inline nlohmann::json to_json(const LSTMConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"d_embed", c.d_embed},     {"d_hidden", c.d_hidden},
          {"max_len", c.max_len},       {"n_classes", c.n_classes}, {"seed", c.seed}};
}

inline LSTMConfig lstm_config_from_json(const nlohmann::json& j, LSTMConfig c = {}) {
  constexpr const char* where = "lstm config";
  detail::reject_unknown(j, {"vocab_size", "d_embed", "d_hidden", "max_len", "n_classes", "seed"},
                         where);
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = detail::get_field<std::decay_t<decltype(field)>>(j, key, where);
  };
  read("vocab_size", c.vocab_size);
  read("d_embed", c.d_embed);
  read("d_hidden", c.d_hidden);
  read("max_len", c.max_len);
  read("n_classes", c.n_classes);
  read("seed", c.seed);
  return c;
}

/// Single-direction LSTM unrolled over each sequence's non-PAD positions; the
/// final hidden state feeds a linear head. Gate column order is i, f, g, o.
class LSTMClassifier {
 public:
  explicit LSTMClassifier(LSTMConfig config) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    const std::size_t e = config_.d_embed, h = config_.d_hidden;
    const double stddev = 0.02;
    tok_emb_ = params_.add("tok_emb", normal_tensor({config_.vocab_size, e}, stddev, rng));
    w_input_ = params_.add("cell.w_input", normal_tensor({e, 4 * h}, stddev, rng));
    w_hidden_ = params_.add("cell.w_hidden", normal_tensor({h, 4 * h}, stddev, rng));
    bias_ = params_.add("cell.bias", Tensor({4 * h}, 0.0));
    head_w_ = params_.add("head.weight", normal_tensor({h, config_.n_classes}, stddev, rng));
    head_b_ = params_.add("head.bias", Tensor({config_.n_classes}, 0.0));
  }

  LSTMClassifier(const LSTMClassifier& other) : LSTMClassifier(other.config_) {
    const auto& src = other.params_.entries();
    const auto& dst = params_.entries();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      Var target = dst[i].var;
      target.value().values() = src[i].var.value().values();
    }
  }
  LSTMClassifier& operator=(const LSTMClassifier&) = delete;
  LSTMClassifier(LSTMClassifier&&) = default;
  LSTMClassifier& operator=(LSTMClassifier&&) = default;

  const LSTMConfig& config() const { return config_; }
  const ParameterSet& parameters() const { return params_; }
  std::size_t max_len() const { return config_.max_len; }

  /// Logits [batch, n_classes]. Dropout options are accepted and ignored.
  Var forward(const std::vector<TokenSequence>& batch, const ForwardOptions& = {}) const {
    return linear(final_hidden(batch), head_w_, head_b_);
  }

  /// Hidden state after each sequence's last non-PAD step, [batch, d_hidden].
  Var final_hidden(const std::vector<TokenSequence>& batch) const {
    check_batch(batch, config_.max_len, config_.vocab_size, "lstm forward");
    const std::size_t n = batch.size(), len = longest(batch), h = config_.d_hidden;
    std::vector<std::size_t> ids(n * len);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t t = 0; t < len; ++t) ids[b * len + t] = batch[b].ids[t];
    }
    // input projections for every position at once
    const Var projected = ops::matmul(ops::embedding(tok_emb_, std::move(ids)), w_input_);

    Var hidden = ops::constant(Tensor({n, h}, 0.0));
    Var cell = ops::constant(Tensor({n, h}, 0.0));
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<std::size_t> rows(n);
      std::vector<bool> active(n);
      bool all_active = true;
      for (std::size_t b = 0; b < n; ++b) {
        rows[b] = b * len + t;
        active[b] = t < batch[b].true_length;
        all_active = all_active && active[b];
      }
      Var z = ops::add_bias(
          ops::add(ops::gather_rows(projected, std::move(rows)), ops::matmul(hidden, w_hidden_)),
          bias_);
      Var i = ops::sigmoid(ops::slice_cols(z, 0, h));
      Var f = ops::sigmoid(ops::slice_cols(z, h, h));
      Var g = ops::tanh(ops::slice_cols(z, 2 * h, h));
      Var o = ops::sigmoid(ops::slice_cols(z, 3 * h, h));
      Var next_cell = ops::add(ops::mul(f, cell), ops::mul(i, g));
      Var next_hidden = ops::mul(o, ops::tanh(next_cell));
      if (all_active) {
        cell = next_cell;
        hidden = next_hidden;
      } else {
        cell = ops::select_rows(active, next_cell, cell);
        hidden = ops::select_rows(active, next_hidden, hidden);
      }
    }
    return hidden;
  }

 private:
  LSTMConfig config_;
  ParameterSet params_;
  Var tok_emb_, w_input_, w_hidden_, bias_, head_w_, head_b_;
};

}  // namespace vuldetect::models
