#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vuldetect/models/params.hpp"

namespace vuldetect::models {

struct TransformerConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_heads = 2;
  std::size_t n_layers = 2;
  std::size_t d_ff = 256;
  std::size_t max_len = 256;
  std::size_t n_classes = 2;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;

  bool operator==(const TransformerConfig&) const = default;

  static TransformerConfig teacher(std::size_t vocab_size, std::size_t max_len = 256) {
    return {vocab_size, 128, 4, 4, 512, max_len, 2, 0.1, 0};
  }
  static TransformerConfig student(std::size_t vocab_size, std::size_t max_len = 256) {
    return {vocab_size, 64, 2, 2, 256, max_len, 2, 0.1, 0};
  }

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw ConfigError(std::string("transformer.") + name + " must be positive");
    };
    positive(vocab_size, "vocab_size");
    positive(d_model, "d_model");
    positive(n_heads, "n_heads");
    positive(n_layers, "n_layers");
    positive(d_ff, "d_ff");
    positive(max_len, "max_len");
    if (d_model % n_heads != 0) {
      throw ConfigError("transformer: d_model " + std::to_string(d_model) +
                        " is not divisible by n_heads " + std::to_string(n_heads));
    }
    if (n_classes < 2) throw ConfigError("transformer.n_classes must be at least 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw ConfigError("transformer.dropout_rate must lie in [0, 1)");
    }
  }
};

inline nlohmann::json to_json(const TransformerConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},     {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},     {"d_ff", c.d_ff},           {"max_len", c.max_len},
          {"n_classes", c.n_classes},   {"dropout_rate", c.dropout_rate}, {"seed", c.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline TransformerConfig transformer_config_from_json(const nlohmann::json& j,
                                                      TransformerConfig c = {}) {
  constexpr const char* where = "transformer config";
  detail::reject_unknown(j, {"vocab_size", "d_model", "n_heads", "n_layers", "d_ff", "max_len",
                             "n_classes", "dropout_rate", "seed"},
                         where);
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = detail::get_field<std::decay_t<decltype(field)>>(j, key, where);
  };
  read("vocab_size", c.vocab_size);
  read("d_model", c.d_model);
  read("n_heads", c.n_heads);
  read("n_layers", c.n_layers);
  read("d_ff", c.d_ff);
  read("max_len", c.max_len);
  read("n_classes", c.n_classes);
  read("dropout_rate", c.dropout_rate);
  read("seed", c.seed);
  return c;
}

/// GPT-style decoder classifier: learned positions, pre-norm blocks with
/// causal attention and a GELU feed-forward, final layer norm, and a linear
/// head read at the last non-PAD position.
class TransformerClassifier {
 public:
  explicit TransformerClassifier(TransformerConfig config) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    const std::size_t d = config_.d_model;
    const double stddev = 0.02;
    tok_emb_ = params_.add("tok_emb", normal_tensor({config_.vocab_size, d}, stddev, rng));
    pos_emb_ = params_.add("pos_emb", normal_tensor({config_.max_len, d}, stddev, rng));
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
      const std::string p = "blocks." + std::to_string(l) + ".";
      Block b;
      b.ln1_gamma = params_.add(p + "ln1.gamma", Tensor({d}, 1.0));
      b.ln1_beta = params_.add(p + "ln1.beta", Tensor({d}, 0.0));
      b.w_qkv = params_.add(p + "attn.w_qkv", normal_tensor({d, 3 * d}, stddev, rng));
      b.b_qkv = params_.add(p + "attn.b_qkv", Tensor({3 * d}, 0.0));
      b.w_out = params_.add(p + "attn.w_out", normal_tensor({d, d}, stddev, rng));
      b.b_out = params_.add(p + "attn.b_out", Tensor({d}, 0.0));
      b.ln2_gamma = params_.add(p + "ln2.gamma", Tensor({d}, 1.0));
      b.ln2_beta = params_.add(p + "ln2.beta", Tensor({d}, 0.0));
      b.w_ff1 = params_.add(p + "ff.w1", normal_tensor({d, config_.d_ff}, stddev, rng));
      b.b_ff1 = params_.add(p + "ff.b1", Tensor({config_.d_ff}, 0.0));
      b.w_ff2 = params_.add(p + "ff.w2", normal_tensor({config_.d_ff, d}, stddev, rng));
      b.b_ff2 = params_.add(p + "ff.b2", Tensor({d}, 0.0));
      blocks_.push_back(b);
    }
    lnf_gamma_ = params_.add("ln_f.gamma", Tensor({d}, 1.0));
    lnf_beta_ = params_.add("ln_f.beta", Tensor({d}, 0.0));
    head_w_ = params_.add("head.weight", normal_tensor({d, config_.n_classes}, stddev, rng));
    head_b_ = params_.add("head.bias", Tensor({config_.n_classes}, 0.0));
  }

  TransformerClassifier(const TransformerClassifier& other)
      : TransformerClassifier(other.config_) {
    copy_values_from(other);
  }
  TransformerClassifier& operator=(const TransformerClassifier&) = delete;
  TransformerClassifier(TransformerClassifier&&) = default;
  TransformerClassifier& operator=(TransformerClassifier&&) = default;

  const TransformerConfig& config() const { return config_; }
  const ParameterSet& parameters() const { return params_; }
  std::size_t max_len() const { return config_.max_len; }

  /// Logits [batch, n_classes].
  Var forward(const std::vector<TokenSequence>& batch, const ForwardOptions& opts = {}) const {
    check_batch(batch, config_.max_len, config_.vocab_size, "transformer forward");
    const std::size_t len = longest(batch);
    Var x = final_states(batch, len, opts);
    std::vector<std::size_t> last(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) last[b] = b * len + batch[b].true_length - 1;
    Var h = ops::gather_rows(x, std::move(last));
    h = ops::layer_norm(h, lnf_gamma_, lnf_beta_);
    return linear(h, head_w_, head_b_);
  }

  /// Per-position outputs of the final block (before the final norm), shape
  /// [batch * L, d_model] where L is the longest true_length in the batch.
  Var hidden_states(const std::vector<TokenSequence>& batch) const {
    check_batch(batch, config_.max_len, config_.vocab_size, "transformer hidden_states");
    return final_states(batch, longest(batch), {});
  }

  /// Copies parameter values from a model of identical shape.
  void copy_values_from(const TransformerClassifier& other) {
    if (!(other.config_.vocab_size == config_.vocab_size && other.config_.d_model == config_.d_model &&
          other.config_.n_heads == config_.n_heads && other.config_.n_layers == config_.n_layers &&
          other.config_.d_ff == config_.d_ff && other.config_.max_len == config_.max_len &&
          other.config_.n_classes == config_.n_classes)) {
      throw ConfigError("copy_values_from: architectures differ");
    }
    const auto& src = other.params_.entries();
    const auto& dst = params_.entries();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      Var target = dst[i].var;
      target.value().values() = src[i].var.value().values();
    }
  }

 private:
  struct Block {
    Var ln1_gamma, ln1_beta, w_qkv, b_qkv, w_out, b_out;
    Var ln2_gamma, ln2_beta, w_ff1, b_ff1, w_ff2, b_ff2;
  };

  // Positions at or beyond `len` are never visible to earlier queries, so
  // computing only the first `len` columns gives the same states there.
  Var final_states(const std::vector<TokenSequence>& batch, std::size_t len,
                   const ForwardOptions& opts) const {
    const std::size_t n = batch.size();
    std::vector<std::size_t> ids(n * len), pos(n * len), lengths(n);
    for (std::size_t b = 0; b < n; ++b) {
      lengths[b] = batch[b].true_length;
      for (std::size_t t = 0; t < len; ++t) {
        ids[b * len + t] = batch[b].ids[t];
        pos[b * len + t] = t;
      }
    }
    auto drop = [&](const Var& v) {
      return opts.dropout_rng && config_.dropout_rate > 0.0
                 ? ops::dropout(v, config_.dropout_rate, *opts.dropout_rng)
                 : v;
    };
    Var x = drop(ops::add(ops::embedding(tok_emb_, std::move(ids)),
                          ops::gather_rows(pos_emb_, std::move(pos))));
    for (const Block& blk : blocks_) {
      Var h = ops::layer_norm(x, blk.ln1_gamma, blk.ln1_beta);
      Var qkv = linear(h, blk.w_qkv, blk.b_qkv);
      Var a = ops::causal_self_attention(qkv, n, len, config_.n_heads, lengths);
      x = ops::add(x, drop(linear(a, blk.w_out, blk.b_out)));
      h = ops::layer_norm(x, blk.ln2_gamma, blk.ln2_beta);
      Var f = ops::gelu(linear(h, blk.w_ff1, blk.b_ff1));
      x = ops::add(x, drop(linear(f, blk.w_ff2, blk.b_ff2)));
    }
    return x;
  }

  TransformerConfig config_;
  ParameterSet params_;
  Var tok_emb_, pos_emb_;
  std::vector<Block> blocks_;
  Var lnf_gamma_, lnf_beta_, head_w_, head_b_;
};

}  // namespace vuldetect::models
