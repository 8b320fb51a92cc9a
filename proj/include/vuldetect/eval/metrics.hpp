#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vuldetect/errors.hpp"

namespace vuldetect::eval {

/// Binary classification summary; label 1 (vulnerable) is the positive class.
/// confusion[true][predicted].
struct EvalReport {
  std::array<std::array<std::uint64_t, 2>, 2> confusion{};
  std::uint64_t n = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // set when precision, recall or f1 had a zero denominator and was reported as 0
  bool degenerate = false;

  std::uint64_t tp() const { return confusion[1][1]; }
  std::uint64_t fp() const { return confusion[0][1]; }
  std::uint64_t tn() const { return confusion[0][0]; }
  std::uint64_t fn() const { return confusion[1][0]; }

  bool operator==(const EvalReport&) const = default;
};

/// Derives the ratios from a tallied confusion matrix.
inline EvalReport report_from_confusion(const std::array<std::array<std::uint64_t, 2>, 2>& confusion) {
  EvalReport r;
  r.confusion = confusion;
  r.n = confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
  if (r.n == 0) throw UsageError("metrics: no samples");
  auto ratio = [&](std::uint64_t num, std::uint64_t den) {
    if (den == 0) {
      r.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = static_cast<double>(r.tp() + r.tn()) / static_cast<double>(r.n);
  r.precision = ratio(r.tp(), r.tp() + r.fp());
  r.recall = ratio(r.tp(), r.tp() + r.fn());
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.f1 = 0.0;
    r.degenerate = true;
  }
  return r;
}

inline EvalReport compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw UsageError("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw UsageError("metrics: no samples");
  std::array<std::array<std::uint64_t, 2>, 2> confusion{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if ((y != 0 && y != 1) || (p != 0 && p != 1)) {
      throw UsageError("metrics: entry " + std::to_string(i) + " is not a 0/1 label");
    }
    ++confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
  }
  return report_from_confusion(confusion);
}

}  // namespace vuldetect::eval
