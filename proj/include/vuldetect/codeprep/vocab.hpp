#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "vuldetect/codeprep/lexer.hpp"
#include "vuldetect/errors.hpp"

namespace vuldetect::codeprep {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr std::size_t kReservedCount = 3;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kClsToken = "<cls>";

/// Dense token <-> id mapping with PAD=0, UNK=1, CLS=2 reserved.
class Vocabulary {
 public:
  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  /// `tokens` are the non-reserved entries, assigned ids 3, 4, ...
  explicit Vocabulary(const std::vector<std::string>& tokens) {
    tokens_ = {std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken)};
    for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<TokenId>(i));
    for (const auto& tok : tokens) {
      if (tok.empty()) throw PreprocessError("vocabulary: empty token");
      if (!ids_.emplace(tok, static_cast<TokenId>(tokens_.size())).second) {
        throw PreprocessError("vocabulary: duplicate token '" + tok + "'");
      }
      tokens_.push_back(tok);
    }
  }

  std::size_t size() const { return tokens_.size(); }

  TokenId id(const std::string& token) const {
    const auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
  }
  bool contains(const std::string& token) const { return ids_.contains(token); }

  const std::string& token(TokenId id) const {
    if (id >= tokens_.size()) throw IndexError("vocabulary: id " + std::to_string(id) + " out of range");
    return tokens_[id];
  }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Non-reserved entries in id order.
  std::vector<std::string> entries() const {
    return {tokens_.begin() + kReservedCount, tokens_.end()};
  }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Ranks tokens by descending frequency, ties by token text, keeping at most
/// max_size - 3 entries seen at least min_freq times.
inline Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus,
                              std::size_t max_size, std::size_t min_freq = 1) {
  if (max_size <= kReservedCount) {
    throw ConfigError("build_vocab: max_size must exceed the 3 reserved ids");
  }
  if (min_freq == 0) throw ConfigError("build_vocab: min_freq must be positive");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& stream : corpus) {
    for (const auto& tok : stream) {
      ++counts[tok];
      ++total;
    }
  }
  if (total == 0) throw PreprocessError("build_vocab: empty corpus");
  for (auto reserved : {kPadToken, kUnkToken, kClsToken}) counts.erase(std::string(reserved));

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, count] : counts) {
    if (count >= min_freq) ranked.emplace_back(tok, count);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size - kReservedCount) ranked.resize(max_size - kReservedCount);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& entry : ranked) tokens.push_back(std::move(entry.first));
  return Vocabulary(tokens);
}

/// One `{"id":n,"token":"t"}` object per line, ids ascending.
inline std::string vocab_to_jsonl(const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    nlohmann::json row = {{"id", i}, {"token", vocab.tokens()[i]}};
    out += row.dump();
    out.push_back('\n');
  }
  return out;
}

inline Vocabulary vocab_from_jsonl(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0, expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw PreprocessError("vocabulary line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!row.is_object() || !row.contains("id") || !row.contains("token") ||
        !row["id"].is_number_unsigned() || !row["token"].is_string()) {
      throw PreprocessError("vocabulary line " + std::to_string(line_no) +
                            ": expected {\"id\": uint, \"token\": string}");
    }
    if (row["id"].get<std::size_t>() != expected) {
      throw PreprocessError("vocabulary line " + std::to_string(line_no) + ": id " +
                            std::to_string(row["id"].get<std::size_t>()) + " breaks dense order");
    }
    const auto token = row["token"].get<std::string>();
    if (expected < kReservedCount) {
      const std::string_view reserved[] = {kPadToken, kUnkToken, kClsToken};
      if (token != reserved[expected]) {
        throw PreprocessError("vocabulary line " + std::to_string(line_no) +
                              ": reserved id must hold " + std::string(reserved[expected]));
      }
    } else {
      tokens.push_back(token);
    }
    ++expected;
  }
  if (expected < kReservedCount) throw PreprocessError("vocabulary: missing reserved entries");
  return Vocabulary(tokens);
}

inline void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write vocabulary file " + path);
  out << vocab_to_jsonl(vocab);
}

inline Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read vocabulary file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return vocab_from_jsonl(text);
}

/// Encoded, fixed-length model input.
struct TokenSequence {
  std::vector<TokenId> ids;
  std::size_t true_length = 0;
  int label = 0;

  bool operator==(const TokenSequence&) const = default;
};

/// [CLS] followed by the mapped tokens, truncated to max_len - 1 and padded
/// with PAD up to max_len.
inline TokenSequence encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                            std::size_t max_len, int label = 0) {
  if (max_len < 2) throw ConfigError("encode: max_len must be at least 2");
  TokenSequence seq;
  seq.label = label;
  seq.ids.assign(max_len, kPadId);
  seq.ids[0] = kClsId;
  const std::size_t kept = std::min(tokens.size(), max_len - 1);
  for (std::size_t i = 0; i < kept; ++i) seq.ids[i + 1] = vocab.id(tokens[i]);
  seq.true_length = kept + 1;
  return seq;
}

/// Token texts of the non-PAD positions after CLS.
inline std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < seq.true_length && i < seq.ids.size(); ++i) {
    out.push_back(vocab.token(seq.ids[i]));
  }
  return out;
}

/// Lexes preprocessed code into model tokens, masking literal payloads.
inline std::vector<std::string> model_tokens(std::string_view code,
                                             Language language = Language::c_cpp) {
  std::vector<std::string> out;
  for (auto& tok : lex(code, language)) {
    if (tok.kind == TokenKind::string_literal) {
      out.emplace_back("STRLIT");
    } else if (tok.kind == TokenKind::char_literal) {
      out.emplace_back("CHARLIT");
    } else {
      out.push_back(std::move(tok.text));
    }
  }
  return out;
}

}  // namespace vuldetect::codeprep
