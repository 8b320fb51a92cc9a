#pragma once

#include <iostream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "vuldetect/eval/pipeline.hpp"

namespace vuldetect::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Training allocates and frees many mid-sized buffers per step; keeping them
/// on the heap instead of fresh mmaps avoids page-fault churn.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

namespace detail {

inline eval::RunConfig load_config_with_env(const std::string& path, std::ostream& err) {
  eval::RunConfig config = eval::load_run_config(path);
  if (const auto seed = eval::seed_from_environment()) {
    err << "VULDETECT_SEED=" << *seed << " overrides config seeds\n";
    eval::apply_seed_override(config, *seed);
  }
  return config;
}

inline void print_reports(const std::vector<eval::NamedReport>& reports, std::ostream& out) {
  out << eval::render_report(reports, eval::ReportFormat::text, {"accuracy", "f1"});
}

}  // namespace detail

/// Parses argv and runs one subcommand. 0 success, 1 usage or config error,
/// 2 anything that failed at run time.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Source-code vulnerability detection with multi-teacher knowledge distillation",
               "vuldetect"};
  app.require_subcommand(1);

  std::string input, output, config_path, data_path, out_dir, checkpoint, code_path;
  std::string unit = "function", format = "text";
  std::string api_list;
  bool rename = false;
  std::size_t context = 3, max_size = 5000, min_freq = 1;
  std::vector<std::string> teachers;

  auto* pre = app.add_subcommand("preprocess", "Strip comments, slice and normalize a raw dataset");
  pre->add_option("--input", input, "Raw JSON-lines dataset")->required();
  pre->add_option("--output", output, "Preprocessed JSON-lines output")->required();
  pre->add_option("--unit", unit, "Classification unit")->check(CLI::IsMember({"function", "slice"}));
  pre->add_flag("--rename-identifiers", rename, "Replace user identifiers with VARn/FUNn");
  pre->add_option("--api-list", api_list, "Dangerous-API list file");
  pre->add_option("--context", context, "Context lines around each slice anchor");

  auto* vocab = app.add_subcommand("build-vocab", "Build a token vocabulary from a preprocessed dataset");
  vocab->add_option("--input", input, "Preprocessed JSON-lines dataset")->required();
  vocab->add_option("--output", output, "Vocabulary JSON-lines output")->required();
  vocab->add_option("--max-size", max_size, "Maximum entries including reserved tokens");
  vocab->add_option("--min-freq", min_freq, "Minimum token count");

  auto* teach = app.add_subcommand("train-teacher", "Train a model on hard labels");
  teach->add_option("--config", config_path, "Run config (JSON)")->required();
  teach->add_option("--data", data_path, "Preprocessed JSON-lines dataset")->required();
  teach->add_option("--out", out_dir, "Output directory")->required();

  auto* dist = app.add_subcommand("distill", "Distill teacher checkpoints into a student");
  dist->add_option("--config", config_path, "Run config (JSON)")->required();
  dist->add_option("--teachers", teachers, "Teacher checkpoints, comma separated")
      ->required()
      ->delimiter(',');
  dist->add_option("--data", data_path, "Preprocessed JSON-lines dataset")->required();
  dist->add_option("--out", out_dir, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a preprocessed dataset");
  evaluate->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  evaluate->add_option("--data", data_path, "Preprocessed JSON-lines dataset")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  evaluate->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));

  auto* predict = app.add_subcommand("predict", "Classify one source file");
  predict->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  predict->add_option("--code", code_path, "Source file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*pre) {
      codeprep::PreprocessOptions options;
      options.unit = unit == "slice" ? codeprep::Unit::slice : codeprep::Unit::function;
      options.rename_identifiers = rename;
      if (!api_list.empty()) options.api_list_path = api_list;
      options.context = context;
      const auto summary = eval::run_preprocess(input, output, options);
      err << "preprocessed " << summary.inputs << " samples into " << summary.outputs << " units\n";
    } else if (*vocab) {
      const auto v = eval::run_build_vocab(input, output, max_size, min_freq);
      err << "vocabulary of " << v.size() << " entries\n";
    } else if (*teach) {
      const auto outcome = eval::run_train_teacher(detail::load_config_with_env(config_path, err), data_path,
                                                   out_dir, err);
      detail::print_reports(outcome.reports, out);
    } else if (*dist) {
      const auto outcome = eval::run_distill(detail::load_config_with_env(config_path, err), teachers,
                                             data_path, out_dir, err);
      detail::print_reports(outcome.reports, out);
    } else if (*evaluate) {
      out << eval::run_evaluate(checkpoint, data_path, out_dir, eval::parse_report_format(format), err);
    } else if (*predict) {
      out << eval::run_predict(checkpoint, code_path).dump() << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace vuldetect::cli
