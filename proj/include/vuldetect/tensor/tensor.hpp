#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vuldetect/errors.hpp"

namespace vuldetect {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

/// Dense row-major array of doubles with an optional gradient buffer of the
/// same shape.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_size(shape_)) {
      throw DimensionError("tensor data length " +
                           std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<double> data;
    std::size_t cols = 0;
    for (const auto& row : rows) {
      if (cols == 0) cols = row.size();
      if (row.size() != cols || cols == 0) {
        throw DimensionError("ragged or empty matrix literal");
      }
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({rows.size(), cols}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Leading dimension; 1 for rank-0/rank-1 treated as a single row.
  std::size_t rows() const { return shape_.size() < 2 ? 1 : shape_[0]; }
  /// Product of all trailing dimensions.
  std::size_t cols() const {
    if (shape_.empty()) return 0;
    if (shape_.size() == 1) return shape_[0];
    return data_.size() / shape_[0];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  double item() const {
    if (data_.size() != 1) {
      throw DimensionError("item() on tensor of shape " + shape_string(shape_));
    }
    return data_[0];
  }

  bool has_grad() const { return grad_.has_value(); }
  std::span<double> grad() { return require_grad_buffer(); }
  std::span<const double> grad() const {
    if (!grad_) throw UsageError("tensor has no gradient");
    return *grad_;
  }
  /// Allocates a zero gradient if none exists and returns it.
  std::span<double> ensure_grad() {
    if (!grad_) grad_.emplace(data_.size(), 0.0);
    return *grad_;
  }
  void zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
  }
  void drop_grad() { grad_.reset(); }

 private:
  static std::size_t checked_size(const Shape& shape) {
    for (std::size_t d : shape) {
      if (d == 0) {
        throw DimensionError("tensor dimensions must be positive, got " +
                             shape_string(shape));
      }
    }
    return shape_size(shape);
  }

  std::span<double> require_grad_buffer() {
    if (!grad_) throw UsageError("tensor has no gradient");
    return *grad_;
  }

  Shape shape_;
  std::vector<double> data_;
  std::optional<std::vector<double>> grad_;
};

class GradTape;

/// Shared handle to a tensor that may participate in a recorded graph.
/// Copies alias the same node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false)
      : node_(std::make_shared<Node>(Node{std::move(value), requires_grad, nullptr})) {}

  /// A trainable leaf.
  static Var parameter(Tensor value) { return Var(std::move(value), true); }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->tensor; }
  Tensor& value() { return node_->tensor; }
  const Shape& shape() const { return node_->tensor.shape(); }
  std::size_t size() const { return node_->tensor.size(); }
  double item() const { return node_->tensor.item(); }
  bool requires_grad() const { return node_->requires_grad; }

  bool has_grad() const { return node_->tensor.has_grad(); }
  std::span<const double> grad() const {
    return std::as_const(node_->tensor).grad();
  }
  // Handles share their node, so gradient accumulation works through const
  // copies captured by backward closures.
  std::span<double> ensure_grad() const { return node_->tensor.ensure_grad(); }
  void zero_grad() const { node_->tensor.zero_grad(); }

  const GradTape* tape() const { return node_->tape; }

  bool same_node(const Var& other) const { return node_ == other.node_; }

 private:
  friend class GradTape;
  struct Node {
    Tensor tensor;
    bool requires_grad;
    const GradTape* tape;
  };
  std::shared_ptr<Node> node_;
};

/// Ordered record of executed operations. Operations record a backward
/// closure only while a tape is active on the current thread (see Scope);
/// otherwise they compute values without building a graph.
class GradTape {
 public:
  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;
  ~GradTape() {
    if (active_tape() == this) active_tape() = nullptr;
  }

  /// RAII activation of a tape on the current thread.
  class Scope {
   public:
    explicit Scope(GradTape& tape) : previous_(active_tape()) {
      active_tape() = &tape;
    }
    ~Scope() { active_tape() = previous_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    GradTape* previous_;
  };

  static GradTape* active() { return active_tape(); }

  /// Marks `out` as produced on this tape and stores its backward rule.
  void record(Var& out, std::function<void()> backward_fn) {
    out.node_->requires_grad = true;
    out.node_->tape = this;
    entries_.push_back(std::move(backward_fn));
  }

  /// Seeds d(loss)/d(loss) = 1 and replays the recorded rules in reverse.
  void backward(Var& loss) {
    if (!loss.defined() || loss.tape() != this) {
      throw UsageError("backward: loss was not recorded on this tape");
    }
    if (loss.size() != 1) {
      throw DimensionError("backward: loss must be a scalar, got shape " +
                           shape_string(loss.shape()));
    }
    loss.ensure_grad()[0] = 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      (*it)();
    }
  }

  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

 private:
  static GradTape*& active_tape() {
    thread_local GradTape* tape = nullptr;
    return tape;
  }

  std::vector<std::function<void()>> entries_;
};

}  // namespace vuldetect
