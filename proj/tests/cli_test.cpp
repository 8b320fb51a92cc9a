#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"
#include "vuldetect/data/synthetic.hpp"

using namespace vuldetect;
namespace fs = std::filesystem;

namespace {

const std::string kCorpus = std::string(VULDETECT_SOURCE_DIR) + "/data/synthetic_corpus.jsonl";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "vuldetect");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

/// Per-test scratch directory, removed afterwards.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vuldetect_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small models so the whole pipeline stays within seconds.
  std::string small_config(const std::string& name, std::size_t d_model, std::size_t epochs) {
    const nlohmann::json j = {
        {"model",
         {{"architecture", "transformer"},
          {"config",
           {{"d_model", d_model}, {"n_heads", 2}, {"n_layers", 1}, {"d_ff", 2 * d_model},
            {"max_len", 128}, {"dropout_rate", 0.0}, {"seed", 3}}}}},
        {"distill", {{"epochs", epochs}, {"batch_size", 32}, {"learning_rate", 0.003}, {"seed", 3}}},
        {"split", {{"ratios", {0.7, 0.15, 0.15}}, {"seed", 3}, {"stratified", true}}}};
    write_file(path(name), j.dump(2));
    return path(name);
  }

  std::string preprocessed() {
    const auto r = run({"preprocess", "--input", kCorpus, "--output", path("pre.jsonl"), "--rename-identifiers"});
    EXPECT_EQ(r.code, 0) << r.err;
    return path("pre.jsonl");
  }

  fs::path dir_;
};

// train_log.jsonl without the wall-clock field
std::string log_without_seconds(const fs::path& file) {
  std::istringstream in(read_file(file));
  std::string line, out;
  while (std::getline(in, line)) {
    auto row = nlohmann::json::parse(line);
    row.erase("seconds");
    out += row.dump() + "\n";
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- surface

TEST(Cli, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train-teacher"), std::string::npos);
  EXPECT_NE(r.out.find("distill"), std::string::npos);
}

TEST(Cli, MissingCheckpointNamesFlag) {
  const auto r = run({"evaluate", "--data", "x.jsonl", "--out", "o"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--checkpoint"), std::string::npos) << r.err;
}

TEST(Cli, UnknownSubcommandOrFlag) {
  EXPECT_EQ(run({"train-student"}).code, 1);
  EXPECT_EQ(run({"predict", "--checkpoint", "a", "--code", "b", "--verbose"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"preprocess", "--input", "a", "--output", "b", "--unit", "file"}).code, 1);
}

TEST_F(CliTest, ErrorsMapToExitCodes) {
  // unreadable input is a usage error, a corrupt checkpoint a runtime error
  EXPECT_EQ(run({"preprocess", "--input", path("missing.jsonl"), "--output", path("o.jsonl")}).code, 1);
  write_file(path("bad.json"), "{\"modle\": {}}");
  EXPECT_EQ(run({"train-teacher", "--config", path("bad.json"), "--data", kCorpus, "--out", path("o")}).code, 1);
  write_file(path("junk.vdck"), "VDCKjunk");
  write_file(path("x.c"), "int f(void) { return 0; }\n");
  EXPECT_EQ(run({"predict", "--checkpoint", path("junk.vdck"), "--code", path("x.c")}).code, 2);
}

TEST_F(CliTest, PreprocessAndVocab) {
  const std::string pre = preprocessed();
  const auto ds = data::load_dataset(pre);
  EXPECT_EQ(ds.size(), 2000u);
  EXPECT_TRUE(fs::exists(pre + ".preprocess.json"));
  const auto r = run({"build-vocab", "--input", pre, "--output", path("vocab.jsonl"), "--max-size", "40"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(codeprep::load_vocab(path("vocab.jsonl")).size(), 40u);
}

TEST_F(CliTest, FullPipeline) {
  const std::string pre = preprocessed();
  const auto teach = run({"train-teacher", "--config", small_config("t.json", 32, 3), "--data", pre, "--out",
                          path("teacher")});
  ASSERT_EQ(teach.code, 0) << teach.err;
  for (const char* f : {"model.vdck", "run_config.json", "train_log.jsonl", "split_manifest.jsonl", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "teacher" / f)) << f;
  }
  const auto dist = run({"distill", "--config", small_config("s.json", 16, 3), "--teachers",
                         path("teacher/model.vdck") + "," + path("teacher/model.vdck"), "--data", pre, "--out",
                         path("student")});
  ASSERT_EQ(dist.code, 0) << dist.err;
  const auto eval = run({"evaluate", "--checkpoint", path("student/student.vdck"), "--data", pre, "--out",
                         path("eval"), "--format", "json"});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto reports = eval::reports_from_json(nlohmann::json::parse(read_file(dir_ / "eval" / "report.json")));
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_GT(reports[0].report.accuracy, 0.5);
  EXPECT_EQ(read_file(dir_ / "eval" / "report.json"), eval.out);

  write_file(path("v.c"), "void f(char *s) {\n  char b[8];\n  strcpy(b, s);\n}\n");
  const auto pred = run({"predict", "--checkpoint", path("student/student.vdck"), "--code", path("v.c")});
  ASSERT_EQ(pred.code, 0) << pred.err;
  const auto j = nlohmann::json::parse(pred.out);
  EXPECT_NEAR(j["probabilities"][0].get<double>() + j["probabilities"][1].get<double>(), 1.0, 1e-12);
}

TEST_F(CliTest, RerunFromSavedConfigIsExact) {
  const std::string pre = preprocessed();
  const std::string cfg = small_config("t.json", 16, 2);
  ASSERT_EQ(run({"train-teacher", "--config", cfg, "--data", pre, "--out", path("a")}).code, 0);
  ASSERT_EQ(run({"train-teacher", "--config", cfg, "--data", pre, "--out", path("b")}).code, 0);
  ASSERT_EQ(run({"train-teacher", "--config", path("a/run_config.json"), "--data", pre, "--out", path("c")}).code,
            0);
  for (const char* other : {"b", "c"}) {
    EXPECT_EQ(read_file(dir_ / "a" / "report.json"), read_file(dir_ / other / "report.json")) << other;
    EXPECT_EQ(read_file(dir_ / "a" / "model.vdck"), read_file(dir_ / other / "model.vdck")) << other;
    EXPECT_EQ(log_without_seconds(dir_ / "a" / "train_log.jsonl"),
              log_without_seconds(dir_ / other / "train_log.jsonl"));
  }
}

TEST_F(CliTest, SeedEnvironmentOverride) {
  const std::string pre = preprocessed();
  ::setenv("VULDETECT_SEED", "99", 1);
  const auto r = run({"train-teacher", "--config", small_config("t.json", 16, 1), "--data", pre, "--out", path("a")});
  ::unsetenv("VULDETECT_SEED");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("VULDETECT_SEED=99"), std::string::npos);
  const auto saved = eval::load_run_config(path("a/run_config.json"));
  EXPECT_EQ(saved.distill.seed, 99u);
  EXPECT_EQ(saved.split.seed, 99u);
  EXPECT_EQ(saved.run["seed_override"], 99u);
}

// ---------------------------------------------------------------- corpus

TEST(Corpus, BundledFileMatchesGenerator) {
  EXPECT_EQ(read_file(kCorpus), data::dataset_to_jsonl(data::synthetic_corpus()));
}

// Labels re-derived from the code text: a dangerous call is safe only when
// the line before it opens a sizeof guard, or the call itself is bounded.
TEST(Corpus, LabelsMatchPatternOracle) {
  const std::regex dangerous(R"(\b(strcpy|strcat|sprintf|gets)\(|\bmemcpy\(\w+, \w+, \w+\);)");
  const std::regex guard(R"(^\s*if \((strlen\(\w+\)|\w+) < sizeof\(\w+\)\) \{$)");
  const auto ds = data::load_dataset(kCorpus);
  ASSERT_EQ(ds.size(), 2000u);
  EXPECT_EQ(ds.class_counts(), (std::array<std::size_t, 2>{1000, 1000}));
  for (const auto& s : ds.samples) {
    std::istringstream in(s.code);
    std::string line, previous;
    int label = 0;
    while (std::getline(in, line)) {
      if (std::regex_search(line, dangerous) && !std::regex_match(previous, guard)) label = 1;
      previous = line;
    }
    EXPECT_EQ(label, s.label) << s.id << "\n" << s.code;
  }
}
