#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "vuldetect/data/dataset.hpp"

namespace vuldetect::data {

struct SplitConfig {
  std::array<double, 3> ratios{0.8, 0.1, 0.1};  // train, val, test
  std::uint64_t seed = 0;
  bool stratified = true;

  bool operator==(const SplitConfig&) const = default;

  void validate() const {
    double total = 0.0;
    for (double r : ratios) {
      if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
      total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("split ratios must sum to 1, got " + std::to_string(total));
    }
  }
};

inline nlohmann::json to_json(const SplitConfig& s) {
  return {{"ratios", s.ratios}, {"seed", s.seed}, {"stratified", s.stratified}};
}

inline SplitConfig split_config_from_json(const nlohmann::json& j, SplitConfig s = {}) {
  if (!j.is_object()) throw ConfigError("split: expected an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "ratios") {
        const auto r = value.get<std::vector<double>>();
        if (r.size() != 3) throw ConfigError("split.ratios must have three entries");
        std::copy(r.begin(), r.end(), s.ratios.begin());
      } else if (key == "seed") {
        s.seed = value.get<std::uint64_t>();
      } else if (key == "stratified") {
        s.stratified = value.get<bool>();
      } else {
        throw ConfigError("split: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("split: ") + e.what());
  }
  return s;
}

/// Apportions `n` items by ratio: floors first, then one extra item to each
/// of the largest fractional remainders (earlier part wins ties).
inline std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = ratios[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(quota));
    remainder[i] = quota - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

struct SplitResult {
  Dataset train, val, test;
};

/// Deterministic partition. Stratified mode shuffles each class, then lays
/// samples out so every prefix of length k holds round(k * positives / n)
/// positives; contiguous segments of that order keep each part within one
/// sample of the global class balance.
inline SplitResult split(const Dataset& ds, const SplitConfig& config) {
  config.validate();
  if (ds.empty()) throw UsageError("split: dataset is empty");
  const std::size_t n = ds.size();
  const auto sizes = largest_remainder(n, config.ratios);
  std::mt19937_64 rng(config.seed);

  std::vector<std::size_t> order;
  order.reserve(n);
  if (config.stratified) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < n; ++i) {
      by_class[static_cast<std::size_t>(ds.samples[i].label)].push_back(i);
    }
    for (std::size_t c = 0; c < 2; ++c) {
      if (!by_class[c].empty() && by_class[c].size() < 3) {
        throw UsageError("split: class " + std::to_string(c) + " has only " +
                         std::to_string(by_class[c].size()) +
                         " samples, fewer than the three parts; use a non-stratified split");
      }
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
    }
    const std::size_t positives = by_class[1].size();
    std::size_t taken_pos = 0, taken_neg = 0;
    for (std::size_t k = 1; k <= n; ++k) {
      const std::size_t target = (2 * k * positives + n) / (2 * n);  // round(k*p/n)
      if (target > taken_pos) {
        order.push_back(by_class[1][taken_pos++]);
      } else {
        order.push_back(by_class[0][taken_neg++]);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) order.push_back(i);
    std::shuffle(order.begin(), order.end(), rng);
  }

  SplitResult out{{ds.name + "/train", {}}, {ds.name + "/val", {}}, {ds.name + "/test", {}}};
  std::array<Dataset*, 3> parts{&out.train, &out.val, &out.test};
  std::size_t pos = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t k = 0; k < sizes[p]; ++k) parts[p]->samples.push_back(ds.samples[order[pos++]]);
  }
  return out;
}

/// JSON-lines of {"id", "split"} in train, val, test order.
inline std::string split_manifest(const SplitResult& s) {
  std::string out;
  const std::array<std::pair<const char*, const Dataset*>, 3> parts{
      {{"train", &s.train}, {"val", &s.val}, {"test", &s.test}}};
  for (const auto& [label, ds] : parts) {
    for (const auto& sample : ds->samples) {
      out += nlohmann::json{{"id", sample.id}, {"split", label}}.dump();
      out += '\n';
    }
  }
  return out;
}

inline void write_split_manifest(const SplitResult& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write split manifest " + path);
  out << split_manifest(s);
}

}  // namespace vuldetect::data
