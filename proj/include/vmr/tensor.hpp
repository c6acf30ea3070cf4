#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vmr {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised whenever an op would produce NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<double> grad;  // leaf accumulation buffer, empty until used
};
}  // namespace detail

/// Dense row-major f64 tensor. Copies share storage; values are treated as
/// immutable once an op has consumed them, so handles are safe to read from
/// several threads.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  /// Trainable leaf.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  /// In-place access for leaves (optimizer updates, test perturbation).
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t i) const { return data()[i]; }

  bool requires_grad() const;
  bool is_leaf() const;
  const std::vector<double>& grad() const;
  std::vector<double>& grad_buffer();
  void zero_grad();

  /// Copy of the values, outside any graph.
  Tensor detach() const;
  const detail::Node* id() const { return node_.get(); }

 private:
  friend Tensor make_op_output(Shape, std::vector<double>, std::string_view);
  friend class Tape;
  friend class Gradients;
  std::shared_ptr<detail::Node> node_;
};

/// Builds an op result, validating that every value is finite.
Tensor make_op_output(Shape shape, std::vector<double> values, std::string_view op);

// ----------------------------------------------------------------------------
// Reverse-mode tape
// ----------------------------------------------------------------------------

/// grad_in[i] is null when input i does not participate in differentiation.
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<std::vector<double>* const> grad_in)>;

class Tape {
 public:
  struct Entry {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  void record(std::string_view op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn);
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

/// Installs a tape as the calling thread's recording target for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording on the calling thread for its lifetime.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Records an op on the active tape when any input requires a gradient.
void record_op(std::string_view op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn);

/// Leaf gradients produced by one backward pass.
class Gradients {
 public:
  /// Zero-filled for leaves the loss does not depend on.
  std::vector<double> get(const Tensor& leaf) const;
  bool contains(const Tensor& leaf) const;
  std::size_t size() const { return grads_.size(); }
  /// Adds every gradient into the owning leaf's grad buffer.
  void accumulate_into_leaves() const;

 private:
  friend Gradients backward(const Tensor& loss, const Tape& tape);
  struct Slot {
    Tensor leaf;
    std::vector<double> grad;
  };
  std::unordered_map<const detail::Node*, Slot> grads_;
};

Gradients backward(const Tensor& loss, const Tape& tape);

}  // namespace vmr
