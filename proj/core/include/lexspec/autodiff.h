#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// Every tensor is two-dimensional (vectors are 1 x n rows, scalars are 1 x 1).
// Operations are methods on a Tape. When any input requires a gradient the
// result requires one too and the operation is recorded; otherwise the value
// is computed and nothing is recorded. Tape::backward walks the recorded nodes
// in reverse and accumulates d(loss)/d(tensor) into every leaf that requires a
// gradient.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lexspec {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t numel() const { return rows * cols; }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

namespace detail {
struct TensorImpl;
}

// Shared handle to a tensor. Copying a Tensor aliases the same storage, which
// is how parameters are referenced by both the model and the optimizer. Use
// clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rows() const { return shape().rows; }
  std::size_t cols() const { return shape().cols; }
  std::size_t numel() const { return shape().numel(); }

  std::span<const double> values() const;
  // Writable view. Only valid for tensors that are not part of a live tape.
  std::span<double> mutable_values();
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  // Empty span when the tensor does not require a gradient.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Deep copy of the values (and the requires_grad flag); never on a tape.
  Tensor clone() const;
  // Identity comparison of the underlying storage.
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  friend class Tape;
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl)
      : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Rows of `src` selected by `indices` (repeats allowed): |indices| x cols.
  Tensor gather_rows(const Tensor& src, std::span<const std::size_t> indices);
  // (m x k) * (k x n) -> m x n.
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);
  // Same-shape elementwise operations.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double factor);
  Tensor relu(const Tensor& a);
  Tensor exp(const Tensor& a);
  // Fails on any non-positive entry.
  Tensor log(const Tensor& a);
  // Softmax along each row.
  Tensor softmax_rows(const Tensor& a);
  // axis 0: mean over rows -> 1 x cols; axis 1: mean over columns -> rows x 1.
  Tensor mean(const Tensor& a, int axis);
  // Vertical concatenation; all inputs share the column count.
  Tensor concat_rows(std::span<const Tensor> parts);
  // Each row scaled to unit Euclidean norm. Fails on a zero row.
  Tensor l2_normalize_rows(const Tensor& a);
  // Row-wise cosine similarity of two same-shape tensors -> rows x 1.
  Tensor cosine(const Tensor& a, const Tensor& b);

  // Accumulates d(loss)/d(leaf) into every leaf that requires a gradient.
  // Gradients of intermediate results are recomputed from scratch on every
  // call; leaf gradients accumulate across calls until zeroed.
  void backward(const Tensor& loss);

  // Drops all recorded nodes; tensors produced before the clear can no longer
  // be used as the root of backward().
  void clear();
  std::size_t size() const { return nodes_.size(); }

  // While disabled, operations compute values but never record.
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

 private:
  struct Node {
    std::shared_ptr<detail::TensorImpl> output;
    std::function<void()> backward;
  };

  bool should_record(std::initializer_list<const Tensor*> inputs) const;
  Tensor make_output(Shape shape, std::vector<double> values, bool record);
  void push(const Tensor& out, std::function<void()> fn);

  std::vector<Node> nodes_;
  std::uint64_t id_;
  std::uint64_t generation_ = 0;
  bool recording_ = true;
};

// RAII switch that turns recording off for the lifetime of the guard.
class NoGradGuard {
 public:
  explicit NoGradGuard(Tape& tape) : tape_(tape), previous_(tape.recording()) {
    tape_.set_recording(false);
  }
  ~NoGradGuard() { tape_.set_recording(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape& tape_;
  bool previous_;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Compares analytic gradients of `f` with central differences
// (f(x + h) - f(x - h)) / 2h for every entry of every tensor in `params`.
// The relative error of an entry is |a - n| / max(1e-8, |a| + |n|).
// `f` must build its scalar result on the tape it is given and be
// deterministic. Gradients of `params` are zeroed before and after the check.
GradCheckResult finite_difference_check(
    const std::function<Tensor(Tape&)>& f, std::span<Tensor> params,
    double h = 1e-5);

}  // namespace lexspec
