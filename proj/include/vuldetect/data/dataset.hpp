#pragma once

#include <array>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "vuldetect/codeprep/sample.hpp"
#include "vuldetect/errors.hpp"

namespace vuldetect::data {

using codeprep::RawSample;

/// Labeled samples with unique ids.
struct Dataset {
  std::string name;
  std::vector<RawSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Recounted on every call so it can never drift from the samples.
  std::array<std::size_t, 2> class_counts() const {
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.label)];
    return counts;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.id);
    return out;
  }
};

inline void require_unique_ids(const Dataset& ds) {
  std::unordered_set<std::string> seen;
  for (const auto& s : ds.samples) {
    if (!seen.insert(s.id).second) {
      throw UsageError("dataset '" + ds.name + "': duplicate id '" + s.id + "'");
    }
  }
}

/// Parses JSON-lines text. Blank lines are skipped; errors name the line.
inline Dataset parse_dataset(std::istream& in, const std::string& name) {
  Dataset ds{name, {}};
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (codeprep::is_blank(line)) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw UsageError(where + ": malformed JSON");
    }
    RawSample s = codeprep::sample_from_json(row, where);
    if (!seen.insert(s.id).second) throw UsageError(where + ": duplicate id '" + s.id + "'");
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw UsageError("dataset " + name + " contains no samples");
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read dataset " + path);
  return parse_dataset(in, path);
}

inline std::string dataset_to_jsonl(const Dataset& ds) {
  std::string out;
  for (const auto& s : ds.samples) {
    out += codeprep::sample_to_json(s).dump();
    out += '\n';
  }
  return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write dataset " + path);
  out << dataset_to_jsonl(ds);
}

}  // namespace vuldetect::data
