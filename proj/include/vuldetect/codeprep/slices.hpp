#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vuldetect/codeprep/api_list.hpp"
#include "vuldetect/codeprep/lexer.hpp"

namespace vuldetect::codeprep {

/// The four syntax-based vulnerability candidate categories.
enum class SliceKind { api_call, array_usage, pointer_usage, arithmetic_expression };

inline constexpr std::string_view to_string(SliceKind kind) {
  switch (kind) {
    case SliceKind::api_call: return "api_call";
    case SliceKind::array_usage: return "array_usage";
    case SliceKind::pointer_usage: return "pointer_usage";
    case SliceKind::arithmetic_expression: return "arithmetic_expression";
  }
  return "?";
}

struct CodeSlice {
  SliceKind kind;
  std::size_t anchor_line;  // 1-based
  std::string anchor;       // lexeme that triggered the slice
  std::string text;         // anchor line +/- context lines
};

namespace detail {

inline bool ends_value(const LexToken& tok) {
  switch (tok.kind) {
    case TokenKind::identifier:
    case TokenKind::number_literal:
    case TokenKind::string_literal:
    case TokenKind::char_literal:
      return true;
    case TokenKind::keyword:
      return tok.text == "this" || tok.text == "true" || tok.text == "false" ||
             tok.text == "nullptr" || tok.text == "null";
    case TokenKind::punctuation:
      return tok.text == ")" || tok.text == "]";
    case TokenKind::op:
      return false;
  }
  return false;
}

/// Whether the token at `i` closes an operand, looking through postfix ++/--.
inline bool operand_before(const std::vector<LexToken>& tokens, std::size_t i) {
  if (i == 0) return false;
  std::size_t j = i - 1;
  while (tokens[j].kind == TokenKind::op && (tokens[j].text == "++" || tokens[j].text == "--")) {
    if (j == 0) return false;
    --j;
  }
  // `struct node *p` declares a pointer; the tag name is not an operand.
  if (tokens[j].kind == TokenKind::identifier && j > 0 && tokens[j - 1].kind == TokenKind::keyword &&
      (tokens[j - 1].text == "struct" || tokens[j - 1].text == "union" ||
       tokens[j - 1].text == "enum" || tokens[j - 1].text == "class")) {
    return false;
  }
  return ends_value(tokens[j]);
}

inline bool starts_operand(const LexToken& tok) {
  switch (tok.kind) {
    case TokenKind::identifier:
    case TokenKind::number_literal:
    case TokenKind::string_literal:
    case TokenKind::char_literal:
      return true;
    case TokenKind::keyword:
      return tok.text == "sizeof" || tok.text == "this" || tok.text == "true" ||
             tok.text == "false" || tok.text == "nullptr" || tok.text == "null";
    case TokenKind::punctuation:
      return tok.text == "(";
    case TokenKind::op:
      return tok.text == "-" || tok.text == "+" || tok.text == "!" || tok.text == "~" ||
             tok.text == "*" || tok.text == "&" || tok.text == "++" || tok.text == "--";
  }
  return false;
}

inline std::vector<std::string_view> split_lines(std::string_view code) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = code.find('\n', pos);
    if (end == std::string_view::npos) {
      lines.push_back(code.substr(pos));
      break;
    }
    lines.push_back(code.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

}  // namespace detail

/// Finds vulnerability-candidate anchors with lexical rules and cuts a line
/// window of +/- `context` lines around each. This approximates
/// dependence-based program slicing; it does not follow data or control flow.
///
///  - api_call: a name from `api` followed by `(`
///  - array_usage: an identifier followed by `[`
///  - pointer_usage: `->`, or a `*` that does not follow an operand
///  - arithmetic_expression: a binary `+ - * / %` between two operands
inline std::vector<CodeSlice> extract_slices(std::string_view code, const ApiList& api,
                                             std::size_t context = 3,
                                             Language language = Language::c_cpp) {
  const std::vector<LexToken> tokens = lex(code, language);
  std::set<std::pair<std::size_t, SliceKind>> seen;
  std::vector<CodeSlice> slices;

  auto emit = [&](SliceKind kind, const LexToken& tok) {
    if (!seen.emplace(tok.line, kind).second) return;
    slices.push_back(CodeSlice{kind, tok.line, tok.text, {}});
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const LexToken& tok = tokens[i];
    const LexToken* next = i + 1 < tokens.size() ? &tokens[i + 1] : nullptr;
    if (tok.kind == TokenKind::identifier && next != nullptr) {
      if (next->is(TokenKind::punctuation, "(") && api.contains(tok.text)) {
        emit(SliceKind::api_call, tok);
      } else if (next->is(TokenKind::punctuation, "[")) {
        emit(SliceKind::array_usage, tok);
      }
      continue;
    }
    if (tok.kind != TokenKind::op) continue;
    if (tok.text == "->") {
      emit(SliceKind::pointer_usage, tok);
      continue;
    }
    const bool arithmetic_op = tok.text == "+" || tok.text == "-" || tok.text == "*" ||
                               tok.text == "/" || tok.text == "%";
    if (!arithmetic_op) continue;
    const bool binary = detail::operand_before(tokens, i);
    if (tok.text == "*" && !binary) {
      emit(SliceKind::pointer_usage, tok);
    } else if (binary && next != nullptr && detail::starts_operand(*next)) {
      emit(SliceKind::arithmetic_expression, tok);
    }
  }

  const auto lines = detail::split_lines(code);
  for (CodeSlice& slice : slices) {
    const std::size_t first = slice.anchor_line > context ? slice.anchor_line - context : 1;
    const std::size_t last = std::min(lines.size(), slice.anchor_line + context);
    for (std::size_t l = first; l <= last; ++l) {
      if (l > first) slice.text.push_back('\n');
      slice.text.append(lines[l - 1]);
    }
  }
  std::stable_sort(slices.begin(), slices.end(), [](const CodeSlice& a, const CodeSlice& b) {
    if (a.anchor_line != b.anchor_line) return a.anchor_line < b.anchor_line;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return slices;
}

}  // namespace vuldetect::codeprep
