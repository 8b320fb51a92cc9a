#pragma once

#include <fstream>
#include <set>
#include <string>
#include <string_view>

#include "vuldetect/errors.hpp"

namespace vuldetect::codeprep {

using ApiList = std::set<std::string, std::less<>>;

/// Common C standard-library functions treated as library/API calls.
inline const ApiList& default_api_list() {
  static const ApiList list = {
      // strings
      "strcpy", "strncpy", "strcat", "strncat", "strcmp", "strncmp", "strlen", "strchr",
      "strrchr", "strstr", "strtok", "strdup", "strndup", "strspn", "strcspn", "strpbrk",
      // memory
      "memcpy", "memmove", "memset", "memcmp", "memchr", "malloc", "calloc", "realloc", "free",
      "alloca",
      // formatted I/O
      "printf", "fprintf", "sprintf", "snprintf", "vsprintf", "vsnprintf", "scanf", "fscanf",
      "sscanf",
      // stream I/O
      "gets", "fgets", "puts", "fputs", "getchar", "putchar", "fgetc", "fputc", "fopen",
      "fclose", "fread", "fwrite", "fseek", "ftell", "read", "write", "open", "close",
      // conversions and process control
      "atoi", "atol", "atof", "strtol", "strtoul", "strtod", "system", "exit", "abort",
      "getenv", "rand", "srand",
      // wide strings
      "wcscpy", "wcsncpy", "wcscat", "wcslen"};
  return list;
}

/// Parses an API list: one name per line, `#` starts a comment, blank lines
/// ignored.
inline ApiList parse_api_list(std::string_view text) {
  ApiList out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string_view::npos) {
      const auto last = line.find_last_not_of(" \t\r");
      out.emplace(line.substr(first, last - first + 1));
    }
    pos = end + 1;
  }
  return out;
}

inline ApiList load_api_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read API list file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_api_list(text);
}

}  // namespace vuldetect::codeprep
