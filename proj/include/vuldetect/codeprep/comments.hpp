#pragma once

#include <string>
#include <string_view>

#include "vuldetect/errors.hpp"

namespace vuldetect::codeprep {

/// Removes `//` and `/* */` comments. Literal contents are copied verbatim.
/// A block comment becomes a single space followed by the newlines it
/// spanned, so the line numbers of surrounding code do not move.
inline std::string strip_comments(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  const std::size_t n = code.size();
  std::size_t i = 0, line = 1;

  auto ident_char = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  };
  // Word immediately before position i (used to spot literal prefixes and
  // digit separators).
  auto preceding_word = [&](std::size_t pos) {
    std::size_t start = pos;
    while (start > 0 && ident_char(code[start - 1])) --start;
    return code.substr(start, pos - start);
  };

  while (i < n) {
    const char c = code[i];
    if (c == '/' && i + 1 < n && code[i + 1] == '/') {
      while (i < n && code[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && code[i + 1] == '*') {
      const std::size_t end = code.find("*/", i + 2);
      if (end == std::string_view::npos) {
        throw PreprocessError("unterminated block comment starting at line " +
                              std::to_string(line));
      }
      out.push_back(' ');
      for (std::size_t k = i; k < end; ++k) {
        if (code[k] == '\n') {
          out.push_back('\n');
          ++line;
        }
      }
      i = end + 2;
      continue;
    }
    if (c == '"' || c == '\'') {
      const std::string_view word = preceding_word(i);
      const bool prefixed = word.empty() || word == "L" || word == "u" || word == "U" ||
                            word == "u8" || word.back() == 'R';
      if (c == '\'' && !prefixed) {
        // digit separator such as 1'000
        out.push_back(c);
        ++i;
        continue;
      }
      if (c == '"' && !word.empty() && word.back() == 'R') {
        const std::size_t paren = code.find('(', i + 1);
        if (paren != std::string_view::npos) {
          const std::string terminator =
              ")" + std::string(code.substr(i + 1, paren - i - 1)) + "\"";
          const std::size_t end = code.find(terminator, paren + 1);
          if (end != std::string_view::npos) {
            const std::size_t stop = end + terminator.size();
            for (std::size_t k = i; k < stop; ++k) {
              if (code[k] == '\n') ++line;
            }
            out.append(code.substr(i, stop - i));
            i = stop;
            continue;
          }
        }
      }
      out.push_back(c);
      ++i;
      while (i < n && code[i] != c && code[i] != '\n') {
        if (code[i] == '\\' && i + 1 < n) {
          if (code[i + 1] == '\n') ++line;
          out.push_back(code[i]);
          out.push_back(code[i + 1]);
          i += 2;
          continue;
        }
        out.push_back(code[i]);
        ++i;
      }
      if (i < n && code[i] == c) {
        out.push_back(c);
        ++i;
      }
      continue;
    }
    if (c == '\n') ++line;
    out.push_back(c);
    ++i;
  }
  return out;
}

}  // namespace vuldetect::codeprep
