#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_set>
#include <vector>

#include "vuldetect/data/dataset.hpp"

namespace vuldetect::data {

/// Oversamples the minority class with replacement until both classes have
/// equal counts. Originals keep their position; copies are appended with an
/// id suffix "#dupN".
inline Dataset resample_balance(const Dataset& ds, std::uint64_t seed) {
  const auto counts = ds.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    throw UsageError("resample_balance: dataset '" + ds.name + "' has a single class");
  }
  Dataset out = ds;
  if (counts[0] == counts[1]) return out;
  const int minority = counts[0] < counts[1] ? 0 : 1;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.samples[i].label == minority) pool.push_back(i);
  }
  std::unordered_set<std::string> ids;
  for (const auto& s : ds.samples) ids.insert(s.id);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const std::size_t needed = std::max(counts[0], counts[1]) - std::min(counts[0], counts[1]);
  std::size_t serial = 0;
  for (std::size_t k = 0; k < needed; ++k) {
    RawSample copy = ds.samples[pool[pick(rng)]];
    std::string id;
    do {
      id = copy.id + "#dup" + std::to_string(++serial);
    } while (ids.contains(id));
    ids.insert(id);
    copy.id = std::move(id);
    out.samples.push_back(std::move(copy));
  }
  return out;
}

/// Index batches over `n` items for one epoch. With shuffle, the permutation
/// is seeded from (seed, epoch); the last batch may be short.
inline std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                           std::uint64_t seed, bool shuffle,
                                                           std::uint64_t epoch = 0) {
  if (batch_size == 0) throw UsageError("batch_size must be at least 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
  }
  return out;
}

/// Sample batches of a dataset for one epoch.
inline std::vector<std::vector<RawSample>> batches(const Dataset& ds, std::size_t batch_size,
                                                   std::uint64_t seed, bool shuffle,
                                                   std::uint64_t epoch = 0) {
  std::vector<std::vector<RawSample>> out;
  for (const auto& idx : batch_indices(ds.size(), batch_size, seed, shuffle, epoch)) {
    auto& batch = out.emplace_back();
    for (std::size_t i : idx) batch.push_back(ds.samples[i]);
  }
  return out;
}

}  // namespace vuldetect::data
