#pragma once

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vuldetect/eval/metrics.hpp"

namespace vuldetect::eval {

/// One cell source of the comparison grid.
struct NamedReport {
  std::string model;
  std::string dataset;
  EvalReport report;

  bool operator==(const NamedReport&) const = default;
};

enum class ReportFormat { text, json };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "text") return ReportFormat::text;
  if (s == "json") return ReportFormat::json;
  throw UsageError("--format must be text or json, got '" + s + "'");
}

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"confusion", {{r.confusion[0][0], r.confusion[0][1]}, {r.confusion[1][0], r.confusion[1][1]}}},
          {"n", r.n},
          {"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"degenerate", r.degenerate}};
}

/// Rebuilds a report from its confusion matrix and checks the stored ratios
/// agree with it.
inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  try {
    std::array<std::array<std::uint64_t, 2>, 2> confusion{};
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) confusion[r][c] = j.at("confusion").at(r).at(c).get<std::uint64_t>();
    EvalReport report = report_from_confusion(confusion);
    if (j.at("n").get<std::uint64_t>() != report.n || j.at("accuracy").get<double>() != report.accuracy ||
        j.at("precision").get<double>() != report.precision ||
        j.at("recall").get<double>() != report.recall || j.at("f1").get<double>() != report.f1 ||
        j.at("degenerate").get<bool>() != report.degenerate) {
      throw UsageError("report metrics disagree with the stored confusion matrix");
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed report: ") + e.what());
  }
}

inline void require_distinct(const std::vector<NamedReport>& reports) {
  if (reports.empty()) throw UsageError("render_report: no reports");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : reports) {
    if (!seen.insert({r.model, r.dataset}).second) {
      throw UsageError("render_report: duplicate row for model '" + r.model + "' on dataset '" +
                       r.dataset + "'");
    }
  }
}

inline nlohmann::json reports_to_json(const std::vector<NamedReport>& reports) {
  require_distinct(reports);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json row = to_json(r.report);
    row["model"] = r.model;
    row["dataset"] = r.dataset;
    rows.push_back(std::move(row));
  }
  return {{"reports", rows}};
}

inline std::vector<NamedReport> reports_from_json(const nlohmann::json& j) {
  std::vector<NamedReport> out;
  try {
    for (const auto& row : j.at("reports")) {
      out.push_back({row.at("model").get<std::string>(), row.at("dataset").get<std::string>(),
                     eval_report_from_json(row)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed report document: ") + e.what());
  }
  require_distinct(out);
  return out;
}

namespace detail {

inline double metric_value(const EvalReport& r, const std::string& metric) {
  if (metric == "accuracy") return r.accuracy;
  if (metric == "precision") return r.precision;
  if (metric == "recall") return r.recall;
  if (metric == "f1") return r.f1;
  throw UsageError("unknown metric '" + metric + "'");
}

inline std::string pad(const std::string& s, std::size_t width, bool right) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

}  // namespace detail

/// Model x dataset grid of one metric in percent with two decimals. Rows and
/// columns keep first-appearance order; missing cells show "-", and "*" marks
/// a value that came from a zero denominator.
inline std::string render_grid(const std::vector<NamedReport>& reports, const std::string& metric) {
  require_distinct(reports);
  std::vector<std::string> models, datasets;
  for (const auto& r : reports) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
  }
  const bool ratio_metric = metric != "accuracy";
  bool any_degenerate = false;
  std::vector<std::vector<std::string>> cells(models.size(), std::vector<std::string>(datasets.size(), "-"));
  for (const auto& r : reports) {
    const auto mi = static_cast<std::size_t>(std::find(models.begin(), models.end(), r.model) - models.begin());
    const auto di =
        static_cast<std::size_t>(std::find(datasets.begin(), datasets.end(), r.dataset) - datasets.begin());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * detail::metric_value(r.report, metric));
    cells[mi][di] = buf;
    if (ratio_metric && r.report.degenerate) {
      cells[mi][di] += "*";
      any_degenerate = true;
    }
  }
  std::size_t name_width = std::string("model").size();
  for (const auto& m : models) name_width = std::max(name_width, m.size());
  std::vector<std::size_t> widths;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    std::size_t w = datasets[d].size();
    for (const auto& row : cells) w = std::max(w, row[d].size());
    widths.push_back(w);
  }

  std::string out = metric + " (%)\n";
  out += detail::pad("model", name_width, false);
  for (std::size_t d = 0; d < datasets.size(); ++d) out += " | " + detail::pad(datasets[d], widths[d], true);
  out += "\n" + std::string(name_width, '-');
  for (std::size_t w : widths) out += "-+-" + std::string(w, '-');
  out += "\n";
  for (std::size_t m = 0; m < models.size(); ++m) {
    out += detail::pad(models[m], name_width, false);
    for (std::size_t d = 0; d < datasets.size(); ++d) out += " | " + detail::pad(cells[m][d], widths[d], true);
    out += "\n";
  }
  if (any_degenerate) out += "* zero denominator, reported as 0\n";
  return out;
}

/// Text: one grid per metric, separated by blank lines. JSON: canonical
/// (sorted keys) followed by a newline.
inline std::string render_report(const std::vector<NamedReport>& reports, ReportFormat format,
                                 const std::vector<std::string>& metrics = {"accuracy", "precision",
                                                                            "recall", "f1"}) {
  if (format == ReportFormat::json) return reports_to_json(reports).dump(2) + "\n";
  std::string out;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (i > 0) out += "\n";
    out += render_grid(reports, metrics[i]);
  }
  return out;
}

}  // namespace vuldetect::eval
