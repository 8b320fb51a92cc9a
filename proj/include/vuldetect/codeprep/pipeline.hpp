#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vuldetect/codeprep/api_list.hpp"
#include "vuldetect/codeprep/comments.hpp"
#include "vuldetect/codeprep/normalize.hpp"
#include "vuldetect/codeprep/sample.hpp"
#include "vuldetect/codeprep/slices.hpp"
#include "vuldetect/codeprep/vocab.hpp"

namespace vuldetect::codeprep {

/// Whether a sample is classified whole or as its extracted slices.
enum class Unit { function, slice };

struct PreprocessOptions {
  Unit unit = Unit::function;
  bool rename_identifiers = false;
  std::optional<std::string> api_list_path;  // default table when unset
  std::size_t context = 3;
  Language language = Language::c_cpp;

  bool operator==(const PreprocessOptions&) const = default;
};

inline nlohmann::json to_json(const PreprocessOptions& o) {
  return {{"unit", o.unit == Unit::function ? "function" : "slice"},
          {"rename_identifiers", o.rename_identifiers},
          {"api_list", o.api_list_path ? nlohmann::json(*o.api_list_path) : nlohmann::json()},
          {"context", o.context},
          {"language", o.language == Language::c_cpp ? "c" : "java"}};
}

inline PreprocessOptions preprocess_options_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("preprocess: expected an object");
  PreprocessOptions o;
  for (const auto& [key, value] : j.items()) {
    if (key == "unit") {
      const auto v = value.get<std::string>();
      if (v == "function") o.unit = Unit::function;
      else if (v == "slice") o.unit = Unit::slice;
      else throw ConfigError("preprocess.unit must be 'function' or 'slice', got '" + v + "'");
    } else if (key == "rename_identifiers") {
      o.rename_identifiers = value.get<bool>();
    } else if (key == "api_list") {
      if (!value.is_null()) o.api_list_path = value.get<std::string>();
    } else if (key == "context") {
      o.context = value.get<std::size_t>();
    } else if (key == "language") {
      const auto v = value.get<std::string>();
      if (v == "c") o.language = Language::c_cpp;
      else if (v == "java") o.language = Language::java;
      else throw ConfigError("preprocess.language must be 'c' or 'java', got '" + v + "'");
    } else {
      throw ConfigError("preprocess: unknown key '" + key + "'");
    }
  }
  return o;
}

inline ApiList resolve_api_list(const PreprocessOptions& options) {
  return options.api_list_path ? load_api_list(*options.api_list_path) : default_api_list();
}

/// strip -> (slice) -> normalize. Returns one sample per slice in slice mode
/// (ids suffixed with `/kind@line`), or the sample itself when no anchor is
/// found or in function mode.
inline std::vector<RawSample> preprocess_sample(const RawSample& sample,
                                                const PreprocessOptions& options,
                                                const ApiList& api) {
  const NormalizeOptions norm{options.rename_identifiers, &api, options.language};
  const std::string stripped = strip_comments(sample.code);
  std::vector<RawSample> out;
  if (options.unit == Unit::slice) {
    const std::string code = drop_directives(stripped);
    for (const CodeSlice& slice : extract_slices(code, api, options.context, options.language)) {
      RawSample piece = sample;
      piece.id = sample.id + "/" + std::string(to_string(slice.kind)) + "@" +
                 std::to_string(slice.anchor_line);
      piece.code = normalize(slice.text, norm);
      out.push_back(std::move(piece));
    }
  }
  if (out.empty()) {
    RawSample whole = sample;
    whole.code = normalize(stripped, norm);
    if (is_blank(whole.code)) {
      throw PreprocessError("sample '" + sample.id + "' is empty after preprocessing");
    }
    out.push_back(std::move(whole));
  }
  return out;
}

/// Model input for already-preprocessed code.
inline TokenSequence encode_code(const std::string& code, const Vocabulary& vocab,
                                 std::size_t max_len, int label,
                                 Language language = Language::c_cpp) {
  const auto tokens = model_tokens(code, language);
  return encode(tokens, vocab, max_len, label);
}

}  // namespace vuldetect::codeprep
