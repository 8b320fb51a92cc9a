#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "vuldetect/eval/metrics.hpp"
#include "vuldetect/eval/report.hpp"
#include "vuldetect/eval/run_config.hpp"

using namespace vuldetect;
using namespace vuldetect::eval;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kFixtures = std::string(VULDETECT_FIXTURE_DIR) + "/eval/";

}  // namespace

// ---------------------------------------------------------------- metrics

TEST(Metrics, Perfect) {
  const std::vector<int> y = {1, 0, 1, 1, 0};
  const auto r = compute_metrics(y, y);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(Metrics, HandTallied) {
  const std::vector<int> preds = {1, 1, 0, 0}, labels = {1, 0, 0, 0};
  const auto r = compute_metrics(preds, labels);
  EXPECT_EQ(r.tp(), 1u);
  EXPECT_EQ(r.fp(), 1u);
  EXPECT_EQ(r.tn(), 2u);
  EXPECT_EQ(r.fn(), 0u);
  EXPECT_EQ(r.accuracy, 0.75);
  EXPECT_EQ(r.precision, 0.5);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
}

TEST(Metrics, BruteForceTally) {
  std::mt19937_64 rng(77);
  std::vector<int> preds(10000), labels(10000);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds[i] = static_cast<int>(rng() & 1);
    labels[i] = static_cast<int>((rng() >> 7) & 1);
  }
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == 1 && labels[i] == 1) ++tp;
    if (preds[i] == 1 && labels[i] == 0) ++fp;
    if (preds[i] == 0 && labels[i] == 0) ++tn;
    if (preds[i] == 0 && labels[i] == 1) ++fn;
  }
  const auto r = compute_metrics(preds, labels);
  EXPECT_EQ(r.tp(), tp);
  EXPECT_EQ(r.fp(), fp);
  EXPECT_EQ(r.tn(), tn);
  EXPECT_EQ(r.fn(), fn);
  EXPECT_EQ(r.n, 10000u);
  EXPECT_EQ(r.accuracy, static_cast<double>(tp + tn) / 10000.0);
  EXPECT_EQ(r.precision, static_cast<double>(tp) / static_cast<double>(tp + fp));
  EXPECT_EQ(r.recall, static_cast<double>(tp) / static_cast<double>(tp + fn));
  EXPECT_EQ(r.f1, 2.0 * r.precision * r.recall / (r.precision + r.recall));
}

TEST(Metrics, ZeroDenominatorsFlagged) {
  const std::vector<int> preds = {0, 0, 0}, labels = {0, 1, 0};
  const auto r = compute_metrics(preds, labels);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_TRUE(r.degenerate);
}

TEST(Metrics, RejectsBadInput) {
  const std::vector<int> a = {0, 1}, b = {0}, c = {0, 2}, empty;
  EXPECT_THROW(compute_metrics(a, b), UsageError);
  EXPECT_THROW(compute_metrics(empty, empty), UsageError);
  EXPECT_THROW(compute_metrics(c, a), UsageError);
}

// ---------------------------------------------------------------- report

TEST(Report, SingleRowTable) {
  const auto r = compute_metrics(std::vector<int>{1, 0}, std::vector<int>{1, 1});
  const std::string text = render_report({{"gpt", "SARD", r}}, ReportFormat::text, {"accuracy"});
  EXPECT_EQ(text,
            "accuracy (%)\n"
            "model |  SARD\n"
            "------+------\n"
            "gpt   | 50.00\n");
}

TEST(Report, JsonToTextMatchesGolden) {
  const auto reports = reports_from_json(nlohmann::json::parse(read_file(kFixtures + "reports.json")));
  ASSERT_EQ(reports.size(), 4u);
  EXPECT_EQ(render_report(reports, ReportFormat::text), read_file(kFixtures + "report_golden.txt"));
}

TEST(Report, JsonIsCanonicalAndRoundTrips) {
  const std::string original = read_file(kFixtures + "reports.json");
  const auto reports = reports_from_json(nlohmann::json::parse(original));
  const std::string once = render_report(reports, ReportFormat::json);
  EXPECT_EQ(render_report(reports_from_json(nlohmann::json::parse(once)), ReportFormat::json), once);
  EXPECT_EQ(once.back(), '\n');
  EXPECT_EQ(once.find('\r'), std::string::npos);
  EXPECT_LT(once.find("\"accuracy\""), once.find("\"confusion\""));  // sorted keys
  EXPECT_EQ(reports_from_json(nlohmann::json::parse(once)), reports);
}

TEST(Report, DuplicateRowsRejected) {
  const auto r = compute_metrics(std::vector<int>{1}, std::vector<int>{1});
  EXPECT_THROW(render_report({{"a", "d", r}, {"a", "d", r}}, ReportFormat::text), UsageError);
  EXPECT_THROW(render_report({{"a", "d", r}, {"a", "d", r}}, ReportFormat::json), UsageError);
  EXPECT_THROW(render_report({}, ReportFormat::text), UsageError);
}

TEST(Report, TamperedMetricsRejected) {
  auto j = nlohmann::json::parse(read_file(kFixtures + "reports.json"));
  j["reports"][0]["accuracy"] = 0.5;
  EXPECT_THROW(reports_from_json(j), UsageError);
}

// ---------------------------------------------------------------- run config

TEST(RunConfigFile, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(run_config_from_json(to_json(c)), c);
}

TEST(RunConfigFile, FullRoundTripThroughText) {
  RunConfig c;
  models::LSTMConfig lstm;
  lstm.d_hidden = 32;
  lstm.seed = 9;
  c.model = lstm;
  c.distill.temperature = 4.5;
  c.distill.teacher_checkpoints = {"a.vdck", "b.vdck"};
  c.distill.teacher_weights = {0.25, 0.75};
  c.split = {{0.6, 0.2, 0.2}, 17, false};
  c.data.oversample = true;
  c.data.vocab = "vocab.jsonl";
  c.preprocess.unit = codeprep::Unit::slice;
  c.preprocess.rename_identifiers = true;
  c.preprocess.context = 5;
  c.optimizer.beta2 = 0.98;
  c.run = {{"command", "distill"}, {"data", "x.jsonl"}};
  const RunConfig back = run_config_from_json(nlohmann::json::parse(to_json(c).dump(2)));
  EXPECT_EQ(back, c);
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(RunConfigFile, StrictKeys) {
  EXPECT_THROW(run_config_from_json({{"modle", nlohmann::json::object()}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"data", {{"oversampel", true}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"model", {{"architecture", "rnn"}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"model", {{"config", {{"d_model", 10}, {"n_heads", 3}}}}}}),
               ConfigError);
  EXPECT_THROW(run_config_from_json({{"split", {{"ratios", {0.5, 0.5, 0.5}}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"distill", {{"temperature", -1.0}}}}), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), UsageError);
}

TEST(RunConfigFile, SeedOverride) {
  RunConfig c;
  apply_seed_override(c, 1234);
  EXPECT_EQ(std::get<models::TransformerConfig>(c.model).seed, 1234u);
  EXPECT_EQ(c.distill.seed, 1234u);
  EXPECT_EQ(c.split.seed, 1234u);
  EXPECT_EQ(c.run["seed_override"], 1234u);

  ::setenv("VULDETECT_SEED", "77", 1);
  EXPECT_EQ(seed_from_environment(), 77u);
  ::setenv("VULDETECT_SEED", "-3", 1);
  EXPECT_THROW(seed_from_environment(), UsageError);
  ::unsetenv("VULDETECT_SEED");
  EXPECT_FALSE(seed_from_environment().has_value());
}
