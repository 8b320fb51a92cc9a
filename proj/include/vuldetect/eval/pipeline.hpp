#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vuldetect/codeprep/pipeline.hpp"
#include "vuldetect/data/dataset.hpp"
#include "vuldetect/data/sampling.hpp"
#include "vuldetect/data/split.hpp"
#include "vuldetect/distill/train.hpp"
#include "vuldetect/eval/report.hpp"
#include "vuldetect/eval/run_config.hpp"
#include "vuldetect/models/checkpoint.hpp"

namespace vuldetect::eval {

namespace fs = std::filesystem;

/// Preprocessing options travel with a preprocessed file in `<file>.preprocess.json`.
inline std::string preprocess_sidecar(const std::string& data_path) { return data_path + ".preprocess.json"; }

inline std::optional<codeprep::PreprocessOptions> read_preprocess_sidecar(const std::string& data_path) {
  const std::string path = preprocess_sidecar(data_path);
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  try {
    return codeprep::preprocess_options_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

inline void make_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory '" + dir + "'");
}

inline std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

struct PreprocessSummary {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
};

/// Raw JSON-lines in, preprocessed JSON-lines out, plus the options sidecar.
inline PreprocessSummary run_preprocess(const std::string& input, const std::string& output,
                                        const codeprep::PreprocessOptions& options) {
  const data::Dataset raw = data::load_dataset(input);
  const codeprep::ApiList api = codeprep::resolve_api_list(options);
  data::Dataset out{raw.name, {}};
  for (const auto& s : raw.samples) {
    for (auto& piece : codeprep::preprocess_sample(s, options, api)) out.samples.push_back(std::move(piece));
  }
  data::require_unique_ids(out);
  data::save_dataset(out, output);
  write_canonical_json(codeprep::to_json(options), preprocess_sidecar(output));
  return {raw.size(), out.size()};
}

inline codeprep::Vocabulary vocab_from_dataset(const data::Dataset& ds, std::size_t max_size,
                                               std::size_t min_freq, codeprep::Language language) {
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(ds.size());
  for (const auto& s : ds.samples) corpus.push_back(codeprep::model_tokens(s.code, language));
  return codeprep::build_vocab(corpus, max_size, min_freq);
}

inline codeprep::Vocabulary run_build_vocab(const std::string& input, const std::string& output,
                                            std::size_t max_size, std::size_t min_freq) {
  const data::Dataset ds = data::load_dataset(input);
  const auto options = read_preprocess_sidecar(input).value_or(codeprep::PreprocessOptions{});
  codeprep::Vocabulary vocab = vocab_from_dataset(ds, max_size, min_freq, options.language);
  codeprep::save_vocab(vocab, output);
  return vocab;
}

/// Files written by a training command.
struct TrainOutcome {
  RunConfig config;  // as resolved and written to run_config.json
  distill::TrainResult train;
  std::vector<NamedReport> reports;  // test-split metrics
  std::string checkpoint;
};

namespace detail {

struct PreparedData {
  data::SplitResult parts;
  codeprep::Vocabulary vocab;
  distill::EncodedSet train, val, test;
};

inline std::size_t model_max_len(const ModelConfig& m) {
  return std::visit([](const auto& c) { return c.max_len; }, m);
}

inline void set_vocab_size(ModelConfig& m, std::size_t size) {
  std::visit(
      [&](auto& c) {
        if (c.vocab_size != 0 && c.vocab_size != size) {
          throw ConfigError("model.config.vocab_size is " + std::to_string(c.vocab_size) +
                            " but the vocabulary has " + std::to_string(size) + " entries");
        }
        c.vocab_size = size;
      },
      m);
}

/// Split, optional oversampling, vocabulary, encoding. `fixed_vocab` comes
/// from teachers when distilling.
inline PreparedData prepare(RunConfig& config, const std::string& data_path, const std::string& out_dir,
                            const codeprep::Vocabulary* fixed_vocab, std::ostream& log) {
  if (auto sidecar = read_preprocess_sidecar(data_path)) {
    if (*sidecar != config.preprocess) log << "using preprocessing options from " << preprocess_sidecar(data_path) << "\n";
    config.preprocess = *sidecar;
  }
  const data::Dataset ds = data::load_dataset(data_path);
  PreparedData p;
  p.parts = data::split(ds, config.split);
  data::write_split_manifest(p.parts, (fs::path(out_dir) / "split_manifest.jsonl").string());
  log << "split " << ds.size() << " samples into " << p.parts.train.size() << "/" << p.parts.val.size()
      << "/" << p.parts.test.size() << "\n";

  if (fixed_vocab) {
    p.vocab = *fixed_vocab;
  } else if (config.data.vocab) {
    p.vocab = codeprep::load_vocab(*config.data.vocab);
  } else {
    p.vocab = vocab_from_dataset(p.parts.train, config.data.vocab_max_size, config.data.vocab_min_freq,
                                 config.preprocess.language);
  }
  set_vocab_size(config.model, p.vocab.size());

  const data::Dataset train =
      config.data.oversample ? data::resample_balance(p.parts.train, config.split.seed) : p.parts.train;
  const std::size_t max_len = model_max_len(config.model);
  const auto lang = config.preprocess.language;
  p.train = distill::encode_dataset(train, p.vocab, max_len, lang);
  p.val = distill::encode_dataset(p.parts.val, p.vocab, max_len, lang);
  p.test = distill::encode_dataset(p.parts.test, p.vocab, max_len, lang);
  return p;
}

inline models::AnyClassifier build_model(const ModelConfig& m) {
  return std::visit([](const auto& c) -> models::AnyClassifier {
    using C = std::decay_t<decltype(c)>;
    if constexpr (std::is_same_v<C, models::TransformerConfig>) return models::TransformerClassifier(c);
    else return models::LSTMClassifier(c);
  }, m);
}

inline nlohmann::json checkpoint_meta(const RunConfig& config, const codeprep::Vocabulary& vocab,
                                      const std::string& role, const distill::TrainResult& result) {
  return {{"role", role},
          {"vocab", vocab.entries()},
          {"preprocess", codeprep::to_json(config.preprocess)},
          {"best_epoch", result.best_epoch},
          {"seed", config.distill.seed}};
}

inline codeprep::Vocabulary vocab_from_meta(const nlohmann::json& meta, const std::string& where) {
  try {
    return codeprep::Vocabulary(meta.at("vocab").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError(where + ": meta.vocab is missing or malformed");
  }
}

inline codeprep::PreprocessOptions preprocess_from_meta(const nlohmann::json& meta, const std::string& where) {
  if (!meta.contains("preprocess")) throw CheckpointError(where + ": meta.preprocess is missing");
  return codeprep::preprocess_options_from_json(meta["preprocess"]);
}

/// Opens train_log.jsonl and returns the per-epoch callback that fills it.
class EpochWriter {
 public:
  EpochWriter(const std::string& out_dir, std::ostream& log)
      : out_((fs::path(out_dir) / "train_log.jsonl").string(), std::ios::binary), log_(log) {
    if (!out_) throw UsageError("cannot write train_log.jsonl in '" + out_dir + "'");
  }

  std::function<void(const distill::EpochLog&)> callback() {
    return [this](const distill::EpochLog& e) {
      out_ << distill::to_json(e).dump() << '\n';
      out_.flush();
      char line[160];
      std::snprintf(line, sizeof(line), "epoch %zu  loss %.6f  ce %.6f  kd %.6f  val_acc %.4f  (%.1fs)\n",
                    e.epoch, e.total, e.ce, e.kd, e.val_accuracy, e.seconds);
      log_ << line << std::flush;
    };
  }

 private:
  std::ofstream out_;
  std::ostream& log_;
};

inline void write_reports(const std::vector<NamedReport>& reports, const std::string& out_dir) {
  std::ofstream out((fs::path(out_dir) / "report.json").string(), std::ios::binary);
  out << render_report(reports, ReportFormat::json);
  if (!out) throw Error("failed writing report.json in '" + out_dir + "'");
}

}  // namespace detail

/// Hard-label training of whatever model the config describes. Writes
/// model.vdck, train_log.jsonl, split_manifest.jsonl, report.json and
/// run_config.json into `out_dir`.
inline TrainOutcome run_train_teacher(RunConfig config, const std::string& data_path,
                                      const std::string& out_dir, std::ostream& log) {
  make_output_dir(out_dir);
  const nlohmann::json seed_override = config.run.value("seed_override", nlohmann::json());
  config.run = {{"command", "train-teacher"}, {"data", data_path}};
  if (!seed_override.is_null()) config.run["seed_override"] = seed_override;

  detail::PreparedData p = detail::prepare(config, data_path, out_dir, nullptr, log);
  models::AnyClassifier model = detail::build_model(config.model);
  log << architecture_of(config.model) << " with " << models::parameters(model).scalar_count()
      << " parameters, vocabulary " << p.vocab.size() << "\n";

  detail::EpochWriter writer(out_dir, log);
  distill::TrainOptions options{config.optimizer, writer.callback()};
  TrainOutcome outcome;
  outcome.train = distill::train_teacher(model, p.train, p.val, config.distill, options);
  outcome.reports = {{"teacher", "test", distill::evaluate(model, p.test)}};
  outcome.checkpoint = (fs::path(out_dir) / "model.vdck").string();
  models::save_checkpoint(model, outcome.checkpoint,
                          detail::checkpoint_meta(config, p.vocab, "teacher", outcome.train));
  detail::write_reports(outcome.reports, out_dir);
  write_canonical_json(to_json(config), (fs::path(out_dir) / "run_config.json").string());
  outcome.config = std::move(config);
  return outcome;
}

/// Distills one or more teacher checkpoints into the student the config
/// describes. Teachers must share vocabulary, preprocessing and max_len.
inline TrainOutcome run_distill(RunConfig config, const std::vector<std::string>& teacher_paths,
                                const std::string& data_path, const std::string& out_dir,
                                std::ostream& log) {
  if (teacher_paths.empty()) throw UsageError("distill needs at least one teacher checkpoint");
  make_output_dir(out_dir);
  const nlohmann::json seed_override = config.run.value("seed_override", nlohmann::json());
  config.run = {{"command", "distill"}, {"data", data_path}, {"teachers", teacher_paths}};
  if (!seed_override.is_null()) config.run["seed_override"] = seed_override;
  config.distill.teacher_checkpoints = teacher_paths;

  std::vector<models::Checkpoint> teachers;
  for (const auto& path : teacher_paths) teachers.push_back(models::load_checkpoint(path));
  const codeprep::Vocabulary vocab = detail::vocab_from_meta(teachers[0].meta, teacher_paths[0]);
  const auto teacher_prep = detail::preprocess_from_meta(teachers[0].meta, teacher_paths[0]);
  for (std::size_t k = 0; k < teachers.size(); ++k) {
    if (!(detail::vocab_from_meta(teachers[k].meta, teacher_paths[k]) == vocab) ||
        detail::preprocess_from_meta(teachers[k].meta, teacher_paths[k]) != teacher_prep) {
      throw ConfigError("teacher '" + teacher_paths[k] + "' uses a different vocabulary or preprocessing than '" +
                        teacher_paths[0] + "'");
    }
    if (models::max_len(teachers[k].model) != detail::model_max_len(config.model)) {
      throw ConfigError("teacher '" + teacher_paths[k] + "' has max_len " +
                        std::to_string(models::max_len(teachers[k].model)) + ", student config has " +
                        std::to_string(detail::model_max_len(config.model)));
    }
  }
  config.distill.resolved_weights(teachers.size());
  config.preprocess = teacher_prep;
  config.data.vocab.reset();

  detail::PreparedData p = detail::prepare(config, data_path, out_dir, &vocab, log);
  if (config.preprocess != teacher_prep) {
    throw ConfigError("data '" + data_path + "' was preprocessed differently from the teachers");
  }
  models::AnyClassifier student = detail::build_model(config.model);
  log << "student " << architecture_of(config.model) << " with " << models::parameters(student).scalar_count()
      << " parameters, " << teachers.size() << " teacher(s), T=" << config.distill.temperature << "\n";

  std::vector<const models::AnyClassifier*> teacher_ptrs;
  for (const auto& t : teachers) teacher_ptrs.push_back(&t.model);
  detail::EpochWriter writer(out_dir, log);
  distill::TrainOptions options{config.optimizer, writer.callback()};
  TrainOutcome outcome;
  outcome.train = distill::okdd_train(teacher_ptrs, student, p.train, p.val, config.distill, options);
  for (std::size_t k = 0; k < teachers.size(); ++k) {
    const std::string name = teachers.size() == 1 ? "teacher" : "teacher-" + std::to_string(k + 1);
    outcome.reports.push_back({name, "test", distill::evaluate(teachers[k].model, p.test)});
  }
  outcome.reports.push_back({"student", "test", distill::evaluate(student, p.test)});
  outcome.checkpoint = (fs::path(out_dir) / "student.vdck").string();
  models::save_checkpoint(student, outcome.checkpoint,
                          detail::checkpoint_meta(config, p.vocab, "student", outcome.train));
  detail::write_reports(outcome.reports, out_dir);
  write_canonical_json(to_json(config), (fs::path(out_dir) / "run_config.json").string());
  outcome.config = std::move(config);
  return outcome;
}

/// Scores a checkpoint on a whole preprocessed dataset. Always writes
/// report.json; text format adds report.txt. Returns the rendered document.
inline std::string run_evaluate(const std::string& checkpoint_path, const std::string& data_path,
                                const std::string& out_dir, ReportFormat format, std::ostream& log) {
  make_output_dir(out_dir);
  const models::Checkpoint ck = models::load_checkpoint(checkpoint_path);
  const codeprep::Vocabulary vocab = detail::vocab_from_meta(ck.meta, checkpoint_path);
  const auto prep = detail::preprocess_from_meta(ck.meta, checkpoint_path);
  if (auto sidecar = read_preprocess_sidecar(data_path); sidecar && *sidecar != prep) {
    throw ConfigError("data '" + data_path + "' was preprocessed differently from checkpoint '" +
                      checkpoint_path + "'");
  }
  const data::Dataset ds = data::load_dataset(data_path);
  const distill::EncodedSet set = distill::encode_dataset(ds, vocab, models::max_len(ck.model), prep.language);
  const std::vector<NamedReport> reports = {
      {stem_of(checkpoint_path), stem_of(data_path), distill::evaluate(ck.model, set)}};
  log << "evaluated " << set.size() << " samples\n";

  detail::write_reports(reports, out_dir);
  const std::string document = render_report(reports, format);
  if (format == ReportFormat::text) {
    std::ofstream out((fs::path(out_dir) / "report.txt").string(), std::ios::binary);
    out << document;
  }
  RunConfig record;
  record.model = detail::model_from_json(
      {{"architecture", models::architecture(ck.model)}, {"config", models::config_json(ck.model)}});
  record.preprocess = prep;
  record.run = {{"command", "evaluate"},
                {"checkpoint", checkpoint_path},
                {"data", data_path},
                {"format", format == ReportFormat::text ? "text" : "json"}};
  write_canonical_json(to_json(record), (fs::path(out_dir) / "run_config.json").string());
  return document;
}

/// Classifies one raw source file. In slice mode every slice is scored and
/// the file counts as vulnerable when any slice does.
inline nlohmann::json run_predict(const std::string& checkpoint_path, const std::string& code_path) {
  const models::Checkpoint ck = models::load_checkpoint(checkpoint_path);
  const codeprep::Vocabulary vocab = detail::vocab_from_meta(ck.meta, checkpoint_path);
  const auto prep = detail::preprocess_from_meta(ck.meta, checkpoint_path);
  std::ifstream in(code_path, std::ios::binary);
  if (!in) throw UsageError("cannot read code file '" + code_path + "'");
  std::stringstream buf;
  buf << in.rdbuf();

  const codeprep::RawSample sample{stem_of(code_path), buf.str(), 0, std::nullopt};
  const auto units = codeprep::preprocess_sample(sample, prep, codeprep::resolve_api_list(prep));
  std::vector<models::TokenSequence> seqs;
  for (const auto& u : units) seqs.push_back(codeprep::encode_code(u.code, vocab, models::max_len(ck.model), 0, prep.language));
  const auto predictions = models::predictions_from_logits(models::forward(ck.model, seqs).value());

  nlohmann::json unit_rows = nlohmann::json::array();
  std::size_t chosen = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    unit_rows.push_back({{"id", units[i].id},
                         {"label", predictions[i].label},
                         {"probabilities", predictions[i].probabilities}});
    if (predictions[i].probabilities[1] > predictions[chosen].probabilities[1]) chosen = i;
  }
  return {{"label", predictions[chosen].label},
          {"probabilities", predictions[chosen].probabilities},
          {"units", unit_rows}};
}

}  // namespace vuldetect::eval
