#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vuldetect/codeprep/api_list.hpp"
#include "vuldetect/codeprep/lexer.hpp"

namespace vuldetect::codeprep {

struct NormalizeOptions {
  bool rename_identifiers = false;
  /// Names left untouched by renaming; defaults to default_api_list().
  const ApiList* known_api = nullptr;
  Language language = Language::c_cpp;
};

/// Drops preprocessor directive lines, including their backslash
/// continuations. Other lines are kept byte for byte.
inline std::string drop_directives(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  bool continuing = false;
  std::size_t pos = 0;
  while (pos < code.size()) {
    std::size_t end = code.find('\n', pos);
    const bool has_newline = end != std::string_view::npos;
    if (!has_newline) end = code.size();
    const std::string_view line = code.substr(pos, end - pos);
    const auto first = line.find_first_not_of(" \t\r\f\v");
    const bool directive = continuing || (first != std::string_view::npos && line[first] == '#');
    if (directive) {
      const auto last = line.find_last_not_of(" \t\r");
      continuing = last != std::string_view::npos && line[last] == '\\';
    } else {
      out.append(line);
    }
    if (has_newline) out.push_back('\n');
    pos = end + 1;
  }
  return out;
}

namespace detail {

inline bool renamable(const LexToken& tok, const ApiList& api) {
  return tok.kind == TokenKind::identifier && !api.contains(tok.text);
}

}  // namespace detail

/// Maps user-defined names to FUNCn / VARn in first-appearance order. A name
/// counts as a function when any of its occurrences is directly followed by
/// `(`. The map is global to the sample; scopes are not distinguished.
inline std::unordered_map<std::string, std::string> identifier_renaming(
    const std::vector<LexToken>& tokens, const ApiList& api) {
  std::unordered_set<std::string> called;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (detail::renamable(tokens[i], api) && tokens[i + 1].is(TokenKind::punctuation, "(")) {
      called.insert(tokens[i].text);
    }
  }
  std::unordered_map<std::string, std::string> names;
  std::size_t next_var = 1, next_func = 1;
  for (const LexToken& tok : tokens) {
    if (!detail::renamable(tok, api) || names.contains(tok.text)) continue;
    if (called.contains(tok.text)) {
      names.emplace(tok.text, "FUNC" + std::to_string(next_func++));
    } else {
      names.emplace(tok.text, "VAR" + std::to_string(next_var++));
    }
  }
  return names;
}

/// Removes artifacts: directive lines are dropped, whitespace runs (including
/// newlines) collapse to one space, and optionally identifiers are renamed.
/// Expects comment-free input. Idempotent.
inline std::string normalize(std::string_view code, const NormalizeOptions& options = {}) {
  const std::string without_directives = drop_directives(code);
  const std::vector<LexToken> tokens = lex(without_directives, options.language);
  const ApiList& api = options.known_api != nullptr ? *options.known_api : default_api_list();

  std::unordered_map<std::string, std::string> names;
  if (options.rename_identifiers) names = identifier_renaming(tokens, api);

  std::string out;
  out.reserve(without_directives.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const LexToken& tok = tokens[i];
    if (i > 0) {
      const LexToken& prev = tokens[i - 1];
      if (tok.offset > prev.offset + prev.text.size()) out.push_back(' ');
    }
    if (const auto it = names.find(tok.text);
        it != names.end() && tok.kind == TokenKind::identifier) {
      out.append(it->second);
    } else {
      out.append(tok.text);
    }
  }
  return out;
}

}  // namespace vuldetect::codeprep
