#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vuldetect/codeprep/pipeline.hpp"
#include "vuldetect/data/dataset.hpp"
#include "vuldetect/data/sampling.hpp"
#include "vuldetect/distill/losses.hpp"
#include "vuldetect/eval/metrics.hpp"
#include "vuldetect/models/classifier.hpp"
#include "vuldetect/tensor/optim.hpp"

namespace vuldetect::distill {

using models::AnyClassifier;
using models::TokenSequence;

/// Model-ready form of a dataset: sample ids beside their encoded sequences.
struct EncodedSet {
  std::vector<std::string> ids;
  std::vector<TokenSequence> sequences;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(sequences.size());
    for (const auto& s : sequences) out.push_back(s.label);
    return out;
  }
};

/// Encodes already-preprocessed samples.
inline EncodedSet encode_dataset(const data::Dataset& ds, const codeprep::Vocabulary& vocab,
                                 std::size_t max_len,
                                 codeprep::Language language = codeprep::Language::c_cpp) {
  EncodedSet out;
  out.ids.reserve(ds.size());
  out.sequences.reserve(ds.size());
  for (const auto& s : ds.samples) {
    out.ids.push_back(s.id);
    out.sequences.push_back(codeprep::encode_code(s.code, vocab, max_len, s.label, language));
  }
  return out;
}

/// Soft targets of every teacher for every sample, keyed by (teacher, id).
class TeacherPredictions {
 public:
  TeacherPredictions(double temperature, std::vector<std::string> ids, std::vector<Tensor> probs)
      : temperature_(temperature), ids_(std::move(ids)), probs_(std::move(probs)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
  }

  double temperature() const { return temperature_; }
  std::size_t teacher_count() const { return probs_.size(); }
  std::size_t sample_count() const { return ids_.size(); }
  std::size_t size() const { return probs_.size() * ids_.size(); }
  const Tensor& table(std::size_t teacher) const { return probs_.at(teacher); }

  std::vector<double> row(std::size_t teacher, const std::string& id) const {
    const Tensor& t = probs_.at(teacher);
    const std::size_t r = position(id), c = t.cols();
    return {t.data().begin() + static_cast<std::ptrdiff_t>(r * c),
            t.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * c)};
  }

  /// Rows for the given ids, one [batch, classes] tensor per teacher.
  std::vector<Tensor> gather(const std::vector<std::string>& ids) const {
    std::vector<Tensor> out;
    for (const Tensor& t : probs_) {
      const std::size_t c = t.cols();
      Tensor batch({ids.size(), c});
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t r = position(ids[i]);
        for (std::size_t j = 0; j < c; ++j) batch.at(i, j) = t.at(r, j);
      }
      out.push_back(std::move(batch));
    }
    return out;
  }

 private:
  std::size_t position(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw IndexError("no cached teacher prediction for '" + id + "'");
    return it->second;
  }

  double temperature_;
  std::vector<std::string> ids_;
  std::vector<Tensor> probs_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Logits of `model` over a whole set, computed without a tape or dropout.
inline Tensor dataset_logits(const AnyClassifier& model, const EncodedSet& set,
                             std::size_t chunk = 64) {
  const std::size_t classes = [&] {
    return std::visit([](const auto& m) { return m.config().n_classes; }, model);
  }();
  Tensor out({set.size(), classes});
  for (std::size_t start = 0; start < set.size(); start += chunk) {
    const std::size_t end = std::min(set.size(), start + chunk);
    const std::vector<TokenSequence> batch(set.sequences.begin() + static_cast<std::ptrdiff_t>(start),
                                           set.sequences.begin() + static_cast<std::ptrdiff_t>(end));
    const Tensor logits = models::forward(model, batch).value();
    std::copy(logits.values().begin(), logits.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(start * classes));
  }
  return out;
}

inline TeacherPredictions cache_teacher_predictions(const std::vector<const AnyClassifier*>& teachers,
                                                    const EncodedSet& set, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  std::vector<Tensor> probs;
  for (std::size_t k = 0; k < teachers.size(); ++k) {
    if (!set.empty() && models::max_len(*teachers[k]) != set.sequences.front().ids.size()) {
      throw DimensionError("teacher " + std::to_string(k) + " expects sequence length " +
                           std::to_string(models::max_len(*teachers[k])) + ", data has " +
                           std::to_string(set.sequences.front().ids.size()));
    }
    probs.push_back(soft_targets(dataset_logits(*teachers[k], set), temperature));
  }
  return {temperature, set.ids, std::move(probs)};
}

struct EpochLog {
  std::size_t epoch = 0;
  double ce = 0.0;
  double kd = 0.0;
  double total = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
  double seconds = 0.0;
};

inline nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},           {"ce", e.ce},         {"kd", e.kd},
          {"total", e.total},           {"val_accuracy", e.val_accuracy},
          {"val_f1", e.val_f1},         {"seconds", e.seconds}};
}

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_val_accuracy = 0.0;
};

struct TrainOptions {
  AdamOptions adam;  // learning_rate is taken from the config
  std::function<void(const EpochLog&)> on_epoch;
};

inline eval::EvalReport evaluate(const AnyClassifier& model, const EncodedSet& set) {
  return eval::compute_metrics(models::predict_labels(model, set.sequences), set.labels());
}

namespace detail {

inline void snapshot(const AnyClassifier& model, std::vector<std::vector<double>>& out) {
  out.clear();
  for (const auto& p : models::parameters(model).entries()) out.push_back(p.var.value().values());
}

inline void restore(const AnyClassifier& model, const std::vector<std::vector<double>>& saved) {
  const auto& params = models::parameters(model).entries();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var target = params[i].var;
    target.value().values() = saved[i];
  }
}

/// Shared loop. `cache` is null for hard-label training.
inline TrainResult train_loop(AnyClassifier& student, const EncodedSet& train,
                              const EncodedSet& val, const DistillConfig& config,
                              const TeacherPredictions* cache, const TrainOptions& options) {
  config.validate();
  if (train.empty()) throw UsageError("training set is empty");
  if (val.empty()) throw UsageError("validation set is empty");
  const std::vector<double> weights =
      cache ? config.resolved_weights(cache->teacher_count()) : std::vector<double>{};
  const double hard_weight = cache ? config.hard_loss_weight : 1.0;

  AdamOptions adam = options.adam;
  adam.learning_rate = config.learning_rate;
  Adam optimizer(models::parameters(student).vars(), adam);
  std::seed_seq dropout_seed{static_cast<std::uint32_t>(config.seed),
                             static_cast<std::uint32_t>(config.seed >> 32), 0x64726f70u};
  std::mt19937_64 dropout_rng(dropout_seed);

  TrainResult result;
  std::vector<std::vector<double>> best;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    double ce_sum = 0.0, kd_sum = 0.0, total_sum = 0.0;
    const auto plan = data::batch_indices(train.size(), config.batch_size, config.seed, true, epoch);
    for (std::size_t b = 0; b < plan.size(); ++b) {
      std::vector<TokenSequence> batch;
      std::vector<std::string> ids;
      std::vector<std::size_t> labels;
      for (std::size_t i : plan[b]) {
        batch.push_back(train.sequences[i]);
        ids.push_back(train.ids[i]);
        labels.push_back(static_cast<std::size_t>(train.sequences[i].label));
      }
      const std::vector<Tensor> targets = cache ? cache->gather(ids) : std::vector<Tensor>{};
      GradTape tape;
      LossTerms loss;
      {
        GradTape::Scope scope(tape);
        const Var logits = models::forward(student, batch, {&dropout_rng});
        loss = total_loss(logits, labels, targets, weights, config.temperature, hard_weight);
      }
      if (!std::isfinite(loss.values.total)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1));
      }
      tape.backward(loss.total);
      optimizer.step();
      const double n = static_cast<double>(batch.size());
      ce_sum += loss.values.ce * n;
      kd_sum += loss.values.kd * n;
      total_sum += loss.values.total * n;
    }
    const double count = static_cast<double>(train.size());
    const eval::EvalReport report = evaluate(student, val);
    EpochLog entry;
    entry.epoch = epoch;
    entry.ce = ce_sum / count;
    entry.kd = kd_sum / count;
    entry.total = total_sum / count;
    entry.val_accuracy = report.accuracy;
    entry.val_f1 = report.f1;
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (result.best_epoch == 0 || entry.val_accuracy >= result.best_val_accuracy) {
      result.best_epoch = epoch;
      result.best_val_accuracy = entry.val_accuracy;
      snapshot(student, best);
    }
    result.log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
  }
  if (result.best_epoch != 0) restore(student, best);
  return result;
}

}  // namespace detail

/// Distills `teachers` into `student` with the combined hard/soft loss.
/// Teachers are only read. The student ends at its best validation epoch
/// (ties go to the later epoch).
inline TrainResult okdd_train(const std::vector<const AnyClassifier*>& teachers,
                              AnyClassifier& student, const EncodedSet& train,
                              const EncodedSet& val, const DistillConfig& config,
                              const TrainOptions& options = {}) {
  if (teachers.empty()) throw UsageError("distillation needs at least one teacher");
  if (train.empty()) throw UsageError("training set is empty");
  config.validate();
  const TeacherPredictions cache =
      cache_teacher_predictions(teachers, train, config.temperature);
  return detail::train_loop(student, train, val, config, &cache, options);
}

/// Hard-label training: cross-entropy only.
inline TrainResult train_teacher(AnyClassifier& model, const EncodedSet& train,
                                 const EncodedSet& val, const DistillConfig& config,
                                 const TrainOptions& options = {}) {
  return detail::train_loop(model, train, val, config, nullptr, options);
}

/// Opt-in student initialization from a teacher of identical shape.
inline void copy_teacher_weights(const AnyClassifier& teacher, AnyClassifier& student) {
  const auto& src = models::parameters(teacher).entries();
  const auto& dst = models::parameters(student).entries();
  if (models::architecture(teacher) != models::architecture(student) || src.size() != dst.size()) {
    throw ConfigError("copy_teacher_weights: student and teacher architectures differ");
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].name != dst[i].name || src[i].var.shape() != dst[i].var.shape()) {
      throw ConfigError("copy_teacher_weights: parameter '" + dst[i].name +
                        "' does not match the teacher's shape");
    }
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    Var target = dst[i].var;
    target.value().values() = src[i].var.value().values();
  }
}

}  // namespace vuldetect::distill
