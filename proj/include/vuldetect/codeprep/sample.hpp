#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vuldetect/errors.hpp"

namespace vuldetect::codeprep {

/// One labeled source record: label 1 marks vulnerable code.
struct RawSample {
  std::string id;
  std::string code;
  int label = 0;
  std::optional<std::string> origin;

  bool operator==(const RawSample&) const = default;
};

inline bool is_blank(const std::string& text) {
  return text.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
}

/// Parses one JSON-lines record. Errors carry `where` as location context.
inline RawSample sample_from_json(const nlohmann::json& row, const std::string& where) {
  if (!row.is_object()) throw UsageError(where + ": expected a JSON object");
  RawSample sample;
  if (!row.contains("id") || !row["id"].is_string()) {
    throw UsageError(where + ": field 'id' must be a string");
  }
  sample.id = row["id"].get<std::string>();
  if (!row.contains("code") || !row["code"].is_string()) {
    throw UsageError(where + ": field 'code' must be a string");
  }
  sample.code = row["code"].get<std::string>();
  if (is_blank(sample.code)) throw UsageError(where + ": field 'code' is empty");
  if (!row.contains("label") || !row["label"].is_number_integer()) {
    throw UsageError(where + ": field 'label' must be 0 or 1");
  }
  const auto label = row["label"].get<long long>();
  if (label != 0 && label != 1) {
    throw UsageError(where + ": field 'label' must be 0 or 1, got " + std::to_string(label));
  }
  sample.label = static_cast<int>(label);
  if (row.contains("origin") && !row["origin"].is_null()) {
    if (!row["origin"].is_string()) throw UsageError(where + ": field 'origin' must be a string");
    sample.origin = row["origin"].get<std::string>();
  }
  return sample;
}

inline nlohmann::json sample_to_json(const RawSample& sample) {
  nlohmann::json row = {{"id", sample.id}, {"code", sample.code}, {"label", sample.label}};
  if (sample.origin) row["origin"] = *sample.origin;
  return row;
}

}  // namespace vuldetect::codeprep
