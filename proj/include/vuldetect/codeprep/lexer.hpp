#pragma once

#include <array>
#include <cctype>
#include <cstdio>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "vuldetect/errors.hpp"

namespace vuldetect::codeprep {

enum class Language { c_cpp, java };

enum class TokenKind {
  identifier,
  keyword,
  number_literal,
  string_literal,
  char_literal,
  op,
  punctuation,
};

inline std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::keyword: return "keyword";
    case TokenKind::number_literal: return "number";
    case TokenKind::string_literal: return "string";
    case TokenKind::char_literal: return "char";
    case TokenKind::op: return "operator";
    case TokenKind::punctuation: return "punct";
  }
  return "?";
}

struct LexToken {
  TokenKind kind;
  std::string text;
  std::size_t line;    // 1-based
  std::size_t offset;  // byte offset of the first character

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  bool operator==(const LexToken&) const = default;
};

inline const std::unordered_set<std::string_view>& keywords(Language language) {
  static const std::unordered_set<std::string_view> c_cpp = {
      "alignas", "alignof", "asm", "auto", "bool", "break", "case", "catch", "char",
      "char16_t", "char32_t", "char8_t", "class", "const", "const_cast", "constexpr",
      "continue", "decltype", "default", "delete", "do", "double", "dynamic_cast", "else",
      "enum", "explicit", "export", "extern", "false", "float", "for", "friend", "goto", "if",
      "inline", "int", "long", "mutable", "namespace", "new", "noexcept", "nullptr", "operator",
      "private", "protected", "public", "register", "reinterpret_cast", "restrict", "return",
      "short", "signed", "sizeof", "static", "static_assert", "static_cast", "struct",
      "switch", "template", "this", "thread_local", "throw", "true", "try", "typedef",
      "typeid", "typename", "union", "unsigned", "using", "virtual", "void", "volatile",
      "wchar_t", "while", "_Bool", "_Complex", "_Imaginary"};
  static const std::unordered_set<std::string_view> java = {
      "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class",
      "const", "continue", "default", "do", "double", "else", "enum", "extends", "false",
      "final", "finally", "float", "for", "goto", "if", "implements", "import", "instanceof",
      "int", "interface", "long", "native", "new", "null", "package", "private", "protected",
      "public", "return", "short", "static", "strictfp", "super", "switch", "synchronized",
      "this", "throw", "throws", "transient", "true", "try", "var", "void", "volatile", "while"};
  return language == Language::java ? java : c_cpp;
}

inline bool is_keyword(std::string_view text, Language language = Language::c_cpp) {
  return keywords(language).contains(text);
}

namespace detail {

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
inline bool digit(char c) { return c >= '0' && c <= '9'; }

inline std::string byte_error(std::string_view what, unsigned char byte, std::size_t offset,
                              std::size_t line) {
  char hex[8];
  std::snprintf(hex, sizeof(hex), "0x%02X", byte);
  return std::string(what) + " byte " + hex + " at offset " + std::to_string(offset) +
         " (line " + std::to_string(line) + ")";
}

constexpr std::array<std::string_view, 5> kOps3 = {">>=", "<<=", "...", "->*", "<=>"};
constexpr std::array<std::string_view, 22> kOps2 = {
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "::", "##", ".*"};
constexpr std::string_view kOps1 = "+-*/%=<>!&|^~?:.#";
constexpr std::string_view kPunct = ";,()[]{}";

}  // namespace detail

/// Splits comment-free source into tokens. Operators use longest match;
/// numbers follow the preprocessing-number rule so `0x1F`, `1.5e-3f` and
/// `10UL` are single tokens.
inline std::vector<LexToken> lex(std::string_view code, Language language = Language::c_cpp) {
  std::vector<LexToken> tokens;
  std::size_t i = 0, line = 1;
  const std::size_t n = code.size();

  auto lex_quoted = [&](std::size_t start, std::size_t quote_pos, TokenKind kind) {
    const char quote = code[quote_pos];
    const std::size_t start_line = line;
    std::size_t j = quote_pos + 1;
    while (true) {
      if (j >= n || code[j] == '\n') {
        throw PreprocessError("unterminated literal starting at offset " + std::to_string(start) +
                              " (line " + std::to_string(line) + ")");
      }
      if (code[j] == '\\') {
        if (j + 1 < n && code[j + 1] == '\n') ++line;
        j += 2;
        continue;
      }
      if (code[j] == quote) break;
      ++j;
    }
    tokens.push_back({kind, std::string(code.substr(start, j + 1 - start)), start_line, start});
    i = j + 1;
  };

  auto lex_raw_string = [&](std::size_t start, std::size_t quote_pos) {
    const std::size_t paren = code.find('(', quote_pos + 1);
    if (paren == std::string_view::npos) {
      throw PreprocessError("malformed raw string at offset " + std::to_string(start));
    }
    const std::string terminator =
        ")" + std::string(code.substr(quote_pos + 1, paren - quote_pos - 1)) + "\"";
    const std::size_t end = code.find(terminator, paren + 1);
    if (end == std::string_view::npos) {
      throw PreprocessError("unterminated raw string at offset " + std::to_string(start));
    }
    const std::size_t stop = end + terminator.size();
    tokens.push_back({TokenKind::string_literal, std::string(code.substr(start, stop - start)),
                      line, start});
    for (std::size_t k = start; k < stop; ++k) {
      if (code[k] == '\n') ++line;
    }
    i = stop;
  };

  while (i < n) {
    const char c = code[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
      ++i;
      continue;
    }
    if (c == '\\' && i + 1 < n && (code[i + 1] == '\n' || code[i + 1] == '\r')) {
      // line continuation
      ++i;
      continue;
    }
    if (detail::ident_start(c)) {
      std::size_t j = i;
      while (j < n && detail::ident_char(code[j])) ++j;
      const std::string_view word = code.substr(i, j - i);
      if (language == Language::c_cpp && j < n &&
          (word == "L" || word == "u" || word == "U" || word == "u8")) {
        if (code[j] == '"') { lex_quoted(i, j, TokenKind::string_literal); continue; }
        if (code[j] == '\'') { lex_quoted(i, j, TokenKind::char_literal); continue; }
      }
      if (language == Language::c_cpp && j < n && code[j] == '"' &&
          (word == "R" || word == "LR" || word == "uR" || word == "UR" || word == "u8R")) {
        lex_raw_string(i, j);
        continue;
      }
      tokens.push_back({is_keyword(word, language) ? TokenKind::keyword : TokenKind::identifier,
                        std::string(word), line, i});
      i = j;
      continue;
    }
    if (detail::digit(c) || (c == '.' && i + 1 < n && detail::digit(code[i + 1]))) {
      std::size_t j = i + 1;
      while (j < n) {
        const char d = code[j];
        if ((d == '+' || d == '-') &&
            (code[j - 1] == 'e' || code[j - 1] == 'E' || code[j - 1] == 'p' ||
             code[j - 1] == 'P')) {
          ++j;
        } else if (detail::ident_char(d) || d == '.') {
          ++j;
        } else if (d == '\'' && j + 1 < n && std::isalnum(static_cast<unsigned char>(code[j + 1]))) {
          ++j;  // C++14 digit separator
        } else {
          break;
        }
      }
      tokens.push_back({TokenKind::number_literal, std::string(code.substr(i, j - i)), line, i});
      i = j;
      continue;
    }
    if (c == '"') { lex_quoted(i, i, TokenKind::string_literal); continue; }
    if (c == '\'') { lex_quoted(i, i, TokenKind::char_literal); continue; }
    if (detail::kPunct.find(c) != std::string_view::npos) {
      tokens.push_back({TokenKind::punctuation, std::string(1, c), line, i});
      ++i;
      continue;
    }
    bool matched = false;
    if (language == Language::java) {
      for (std::string_view op : {std::string_view(">>>="), std::string_view(">>>")}) {
        if (code.substr(i, op.size()) == op) {
          tokens.push_back({TokenKind::op, std::string(op), line, i});
          i += op.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    for (std::string_view op : detail::kOps3) {
      if (code.substr(i, 3) == op) {
        tokens.push_back({TokenKind::op, std::string(op), line, i});
        i += 3;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    for (std::string_view op : detail::kOps2) {
      if (code.substr(i, 2) == op) {
        tokens.push_back({TokenKind::op, std::string(op), line, i});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (detail::kOps1.find(c) != std::string_view::npos) {
      tokens.push_back({TokenKind::op, std::string(1, c), line, i});
      ++i;
      continue;
    }
    throw PreprocessError(detail::byte_error("unlexable", static_cast<unsigned char>(c), i, line));
  }
  return tokens;
}

}  // namespace vuldetect::codeprep
