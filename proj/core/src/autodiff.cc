#include "lexspec/autodiff.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <utility>

#include "lexspec/error.h"

namespace lexspec {

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  // Set for tensors produced by a recorded operation.
  std::uint64_t tape_id = 0;
  std::uint64_t generation = 0;
  std::ptrdiff_t node = -1;

  void allocate_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

namespace {

using detail::TensorImpl;

std::atomic<std::uint64_t> next_tape_id{1};

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw Error(std::string(op) + ": shape mismatch " + a.shape().str() +
                " vs " + b.shape().str());
  }
}

void require_positive_shape(Shape s) {
  if (s.rows == 0 || s.cols == 0) {
    throw Error("tensor shape must be positive, got " + s.str());
  }
}

}  // namespace

std::string Shape::str() const {
  std::ostringstream os;
  os << "[" << rows << " x " << cols << "]";
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(shape, 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  return from(shape, std::vector<double>(shape.numel(), value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  require_positive_shape(shape);
  if (values.size() != shape.numel()) {
    throw Error("tensor values length " + std::to_string(values.size()) +
                " does not match shape " + shape.str());
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->values = std::move(values);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->allocate_grad();
  return Tensor(std::move(impl));
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const Shape s{1, values.size()};
  return from(s, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1, 1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->shape;
}

std::span<const double> Tensor::values() const {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->values;
}

std::span<double> Tensor::mutable_values() {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->values;
}

double Tensor::at(std::size_t r, std::size_t c) const {
  const Shape& s = shape();
  if (r >= s.rows || c >= s.cols) throw Error("tensor index out of range");
  return impl_->values[r * s.cols + c];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw Error("item() requires a single-element tensor, got " +
                shape().str());
  }
  return impl_->values[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  if (!impl_) throw Error("use of undefined tensor");
  impl_->requires_grad = flag;
  if (flag) {
    impl_->allocate_grad();
  } else {
    impl_->grad.clear();
  }
}

std::span<const double> Tensor::grad() const {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  return from(shape(), impl_->values, impl_->requires_grad);
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

bool Tape::should_record(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

Tensor Tape::make_output(Shape shape, std::vector<double> values, bool record) {
  return Tensor::from(shape, std::move(values), record);
}

void Tape::push(const Tensor& out, std::function<void()> fn) {
  out.impl_->tape_id = id_;
  out.impl_->generation = generation_;
  out.impl_->node = static_cast<std::ptrdiff_t>(nodes_.size());
  nodes_.push_back(Node{out.impl_, std::move(fn)});
}

Tensor Tape::gather_rows(const Tensor& src,
                         std::span<const std::size_t> indices) {
  const Shape s = src.shape();
  if (indices.empty()) throw Error("gather_rows: empty index list");
  std::vector<double> out(indices.size() * s.cols);
  const auto sv = src.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= s.rows) {
      throw Error("gather_rows: index " + std::to_string(indices[i]) +
                  " out of range for " + s.str());
    }
    std::copy_n(sv.begin() + static_cast<std::ptrdiff_t>(indices[i] * s.cols),
                s.cols, out.begin() + static_cast<std::ptrdiff_t>(i * s.cols));
  }
  const bool record = should_record({&src});
  Tensor result = make_output({indices.size(), s.cols}, std::move(out), record);
  if (record) {
    auto in = src.impl_;
    auto o = result.impl_;
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    push(result, [in, o, idx = std::move(idx)] {
      if (!in->requires_grad) return;
      const std::size_t cols = in->shape.cols;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t c = 0; c < cols; ++c) {
          in->grad[idx[i] * cols + c] += o->grad[i * cols + c];
        }
      }
    });
  }
  return result;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.cols != sb.rows) {
    throw Error("matmul: shape mismatch " + sa.str() + " vs " + sb.str());
  }
  const std::size_t m = sa.rows, k = sa.cols, n = sb.cols;
  std::vector<double> out(m * n, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  const bool record = should_record({&a, &b});
  Tensor result = make_output({m, n}, std::move(out), record);
  if (record) {
    auto ia = a.impl_, ib = b.impl_, o = result.impl_;
    push(result, [ia, ib, o, m, k, n] {
      const auto& g = o->grad;
      if (ia->requires_grad) {
        // dA = dC * B^T
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              acc += g[i * n + j] * ib->values[p * n + j];
            }
            ia->grad[i * k + p] += acc;
          }
        }
      }
      if (ib->requires_grad) {
        // dB = A^T * dC
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = ia->values[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
              ib->grad[p * n + j] += aip * g[i * n + j];
            }
          }
        }
      }
    });
  }
  return result;
}

Tensor Tape::transpose(const Tensor& a) {
  const Shape s = a.shape();
  const auto av = a.values();
  std::vector<double> out(s.numel());
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      out[c * s.rows + r] = av[r * s.cols + c];
    }
  }
  const bool record = should_record({&a});
  Tensor result = make_output({s.cols, s.rows}, std::move(out), record);
  if (record) {
    auto in = a.impl_, o = result.impl_;
    push(result, [in, o, s] {
      if (!in->requires_grad) return;
      for (std::size_t r = 0; r < s.rows; ++r) {
        for (std::size_t c = 0; c < s.cols; ++c) {
          in->grad[r * s.cols + c] += o->grad[c * s.rows + r];
        }
      }
    });
  }
  return result;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const bool record = should_record({&a, &b});
  Tensor result = make_output(a.shape(), std::move(out), record);
  if (record) {
    auto ia = a.impl_, ib = b.impl_, o = result.impl_;
    push(result, [ia, ib, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (ia->requires_grad) ia->grad[i] += o->grad[i];
        if (ib->requires_grad) ib->grad[i] += o->grad[i];
      }
    });
  }
  return result;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const bool record = should_record({&a, &b});
  Tensor result = make_output(a.shape(), std::move(out), record);
  if (record) {
    auto ia = a.impl_, ib = b.impl_, o = result.impl_;
    push(result, [ia, ib, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (ia->requires_grad) ia->grad[i] += o->grad[i];
        if (ib->requires_grad) ib->grad[i] -= o->grad[i];
      }
    });
  }
  return result;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const bool record = should_record({&a, &b});
  Tensor result = make_output(a.shape(), std::move(out), record);
  if (record) {
    auto ia = a.impl_, ib = b.impl_, o = result.impl_;
    push(result, [ia, ib, o] {
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (ia->requires_grad) ia->grad[i] += o->grad[i] * ib->values[i];
        if (ib->requires_grad) ib->grad[i] += o->grad[i] * ia->values[i];
      }
    });
  }
  return result;
}

Tensor Tape::scale(const Tensor& a, double factor) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  const bool record = should_record({&a});
  Tensor result = make_output(a.shape(), std::move(out), record);
  if (record) {
    auto in = a.impl_, o = result.impl_;
    push(result, [in, o, factor] {
      if (!in->requires_grad) return;
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        in->grad[i] += o->grad[i] * factor;
      }
    });
  }
  return result;
}

Tensor Tape::relu(const Tensor& a) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  const bool record = should_record({&a});
  Tensor result = make_output(a.shape(), std::move(out), record);
  if (record) {
    auto in = a.impl_, o = result.impl_;
    push(result, [in, o] {
      if (!in->requires_grad) return;
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        if (in->values[i] > 0.0) in->grad[i] += o->grad[i];
      }
    });
  }
  return result;
}

Tensor Tape::exp(const Tensor& a) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
  const bool record = should_record({&a});
  Tensor result = make_output(a.shape(), std::move(out), record);
  if (record) {
    auto in = a.impl_, o = result.impl_;
    push(result, [in, o] {
      if (!in->requires_grad) return;
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        in->grad[i] += o->grad[i] * o->values[i];
      }
    });
  }
  return result;
}

Tensor Tape::log(const Tensor& a) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    // NaN passes through so that callers can detect a non-finite loss.
    if (av[i] <= 0.0) {
      throw Error("log: non-positive input " + std::to_string(av[i]) +
                  " at flat index " + std::to_string(i));
    }
    out[i] = std::log(av[i]);
  }
  const bool record = should_record({&a});
  Tensor result = make_output(a.shape(), std::move(out), record);
  if (record) {
    auto in = a.impl_, o = result.impl_;
    push(result, [in, o] {
      if (!in->requires_grad) return;
      for (std::size_t i = 0; i < o->grad.size(); ++i) {
        in->grad[i] += o->grad[i] / in->values[i];
      }
    });
  }
  return result;
}

Tensor Tape::softmax_rows(const Tensor& a) {
  const Shape s = a.shape();
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < s.rows; ++r) {
    const double* x = &av[r * s.cols];
    double* y = &out[r * s.cols];
    const double mx = *std::max_element(x, x + s.cols);
    double total = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < s.cols; ++c) y[c] /= total;
  }
  const bool record = should_record({&a});
  Tensor result = make_output(s, std::move(out), record);
  if (record) {
    auto in = a.impl_, o = result.impl_;
    push(result, [in, o, s] {
      if (!in->requires_grad) return;
      for (std::size_t r = 0; r < s.rows; ++r) {
        const double* y = &o->values[r * s.cols];
        const double* gy = &o->grad[r * s.cols];
        double dot = 0.0;
        for (std::size_t c = 0; c < s.cols; ++c) dot += gy[c] * y[c];
        for (std::size_t c = 0; c < s.cols; ++c) {
          in->grad[r * s.cols + c] += y[c] * (gy[c] - dot);
        }
      }
    });
  }
  return result;
}

Tensor Tape::mean(const Tensor& a, int axis) {
  const Shape s = a.shape();
  const auto av = a.values();
  if (axis != 0 && axis != 1) throw Error("mean: axis must be 0 or 1");
  const Shape os = axis == 0 ? Shape{1, s.cols} : Shape{s.rows, 1};
  std::vector<double> out(os.numel(), 0.0);
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      out[axis == 0 ? c : r] += av[r * s.cols + c];
    }
  }
  const double denom = static_cast<double>(axis == 0 ? s.rows : s.cols);
  for (double& v : out) v /= denom;
  const bool record = should_record({&a});
  Tensor result = make_output(os, std::move(out), record);
  if (record) {
    auto in = a.impl_, o = result.impl_;
    push(result, [in, o, s, axis, denom] {
      if (!in->requires_grad) return;
      for (std::size_t r = 0; r < s.rows; ++r) {
        for (std::size_t c = 0; c < s.cols; ++c) {
          in->grad[r * s.cols + c] += o->grad[axis == 0 ? c : r] / denom;
        }
      }
    });
  }
  return result;
}

Tensor Tape::concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool any_grad = false;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) {
      throw Error("concat_rows: shape mismatch " + parts.front().shape().str() +
                  " vs " + p.shape().str());
    }
    rows += p.rows();
    any_grad = any_grad || p.requires_grad();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const Tensor& p : parts) {
    const auto pv = p.values();
    out.insert(out.end(), pv.begin(), pv.end());
  }
  const bool record = recording_ && any_grad;
  Tensor result = make_output({rows, cols}, std::move(out), record);
  if (record) {
    std::vector<std::shared_ptr<TensorImpl>> ins;
    ins.reserve(parts.size());
    for (const Tensor& p : parts) ins.push_back(p.impl_);
    auto o = result.impl_;
    push(result, [ins = std::move(ins), o] {
      std::size_t offset = 0;
      for (const auto& in : ins) {
        const std::size_t n = in->values.size();
        if (in->requires_grad) {
          for (std::size_t i = 0; i < n; ++i) in->grad[i] += o->grad[offset + i];
        }
        offset += n;
      }
    });
  }
  return result;
}

Tensor Tape::l2_normalize_rows(const Tensor& a) {
  const Shape s = a.shape();
  const auto av = a.values();
  std::vector<double> out(av.size());
  std::vector<double> norms(s.rows);
  for (std::size_t r = 0; r < s.rows; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) sq += av[r * s.cols + c] * av[r * s.cols + c];
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) {
      throw Error("l2_normalize_rows: zero-norm row " + std::to_string(r));
    }
    norms[r] = norm;
    for (std::size_t c = 0; c < s.cols; ++c) out[r * s.cols + c] = av[r * s.cols + c] / norm;
  }
  const bool record = should_record({&a});
  Tensor result = make_output(s, std::move(out), record);
  if (record) {
    auto in = a.impl_, o = result.impl_;
    push(result, [in, o, s, norms = std::move(norms)] {
      if (!in->requires_grad) return;
      for (std::size_t r = 0; r < s.rows; ++r) {
        const double* y = &o->values[r * s.cols];
        const double* gy = &o->grad[r * s.cols];
        double dot = 0.0;
        for (std::size_t c = 0; c < s.cols; ++c) dot += y[c] * gy[c];
        for (std::size_t c = 0; c < s.cols; ++c) {
          in->grad[r * s.cols + c] += (gy[c] - y[c] * dot) / norms[r];
        }
      }
    });
  }
  return result;
}

Tensor Tape::cosine(const Tensor& a, const Tensor& b) {
  require_same_shape("cosine", a, b);
  const Shape s = a.shape();
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(s.rows);
  std::vector<double> na(s.rows), nb(s.rows);
  for (std::size_t r = 0; r < s.rows; ++r) {
    double dot = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t c = 0; c < s.cols; ++c) {
      const double x = av[r * s.cols + c], y = bv[r * s.cols + c];
      dot += x * y;
      sa += x * x;
      sb += y * y;
    }
    na[r] = std::sqrt(sa);
    nb[r] = std::sqrt(sb);
    if (!(na[r] > 0.0) || !(nb[r] > 0.0)) {
      throw Error("cosine: zero-norm row " + std::to_string(r));
    }
    out[r] = dot / (na[r] * nb[r]);
  }
  const bool record = should_record({&a, &b});
  Tensor result = make_output({s.rows, 1}, std::move(out), record);
  if (record) {
    auto ia = a.impl_, ib = b.impl_, o = result.impl_;
    push(result, [ia, ib, o, s, na = std::move(na), nb = std::move(nb)] {
      for (std::size_t r = 0; r < s.rows; ++r) {
        const double g = o->grad[r];
        const double cosv = o->values[r];
        for (std::size_t c = 0; c < s.cols; ++c) {
          const std::size_t i = r * s.cols + c;
          const double x = ia->values[i], y = ib->values[i];
          if (ia->requires_grad) {
            ia->grad[i] += g * (y / (na[r] * nb[r]) - cosv * x / (na[r] * na[r]));
          }
          if (ib->requires_grad) {
            ib->grad[i] += g * (x / (na[r] * nb[r]) - cosv * y / (nb[r] * nb[r]));
          }
        }
      }
    });
  }
  return result;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw Error("backward: undefined loss tensor");
  if (loss.numel() != 1) {
    throw Error("backward: loss must be scalar, got " + loss.shape().str());
  }
  const auto& impl = loss.impl_;
  if (!impl->requires_grad || impl->node < 0) {
    throw Error("backward: loss was not produced by a recorded operation");
  }
  if (impl->tape_id != id_ || impl->generation != generation_) {
    throw Error("backward: loss belongs to a cleared or different tape");
  }
  for (auto& node : nodes_) {
    std::fill(node.output->grad.begin(), node.output->grad.end(), 0.0);
  }
  impl->grad[0] = 1.0;
  for (std::ptrdiff_t i = impl->node; i >= 0; --i) {
    nodes_[static_cast<std::size_t>(i)].backward();
  }
}

void Tape::clear() {
  nodes_.clear();
  ++generation_;
}

// ---------------------------------------------------------------------------

GradCheckResult finite_difference_check(
    const std::function<Tensor(Tape&)>& f, std::span<Tensor> params,
    double h) {
  if (!(h > 0.0)) throw Error("finite_difference_check: step must be positive");
  for (Tensor& p : params) p.zero_grad();

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = f(tape);
    if (!std::isfinite(loss.item())) {
      throw Error("finite_difference_check: non-finite function value");
    }
    if (loss.requires_grad()) tape.backward(loss);
    for (const Tensor& p : params) {
      const auto g = p.grad();
      if (g.empty()) {
        analytic.emplace_back(p.numel(), 0.0);
      } else {
        analytic.emplace_back(g.begin(), g.end());
      }
    }
  }

  auto evaluate = [&f] {
    Tape tape;
    NoGradGuard guard(tape);
    const double v = f(tape).item();
    if (!std::isfinite(v)) {
      throw Error("finite_difference_check: non-finite function value");
    }
    return v;
  };

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].mutable_values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double plus = evaluate();
      values[j] = saved - h;
      const double minus = evaluate();
      values[j] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[pi][j];
      const double rel = std::abs(a - numeric) /
                         std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++result.entries_checked;
      if (rel > result.max_relative_error || result.entries_checked == 1) {
        result.max_relative_error = rel;
        result.worst_param = pi;
        result.worst_entry = j;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  for (Tensor& p : params) p.zero_grad();
  return result;
}

}  // namespace lexspec
