#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scn/error.hpp"

namespace scn {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until first accumulation
  bool requires_grad = false;
};
}  // namespace detail

/// Dense n-dimensional float32 tensor, row-major.
///
/// A Tensor is a handle: copies share storage, clone() deep-copies. Gradient
/// buffers live beside the data and are allocated lazily; a parameter whose
/// gradient was never touched reads back as all zeros.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar(float value);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

  std::vector<float>& data() { return impl_->data; }
  const std::vector<float>& data() const { return impl_->data; }

  /// Gradient buffer, same shape as data. Allocated (zeroed) on first access.
  std::vector<float>& grad();
  const std::vector<float>& grad() const;
  bool grad_allocated() const { return !impl_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  /// Value of a single-element tensor.
  float item() const;

  float at2(int i, int j) const;
  float at4(int n, int c, int h, int w) const;

  /// Deep copy of shape/data/requires_grad. The gradient is not copied.
  Tensor clone() const;

  bool shares_storage(const Tensor& other) const {
    return impl_ == other.impl_;
  }

  /// Throws NumericError naming `what` if any element is NaN or infinite.
  void check_finite(const std::string& what) const;

  std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl)
      : impl_(std::move(impl)) {}

  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Records the forward pass as an ordered op list for one backward sweep.
///
/// Ops append themselves during the forward pass, so the list is already in
/// topological order; backward() walks it once in reverse, accumulating
/// gradients into every requires_grad tensor reachable from the loss. A tape
/// is single-use: reset() clears it for the next step.
class Tape {
 public:
  struct Op {
    const char* name;
    std::function<void()> backward;
  };

  void record(const char* name, std::function<void()> backward) {
    ops_.push_back(Op{name, std::move(backward)});
  }

  /// Runs reverse-mode accumulation from a scalar loss produced on this tape.
  /// Calling it a second time without reset() is a UsageError.
  void backward(const Tensor& loss);

  void reset() {
    ops_.clear();
    consumed_ = false;
  }

  size_t num_ops() const { return ops_.size(); }
  bool consumed() const { return consumed_; }

 private:
  std::vector<Op> ops_;
  bool consumed_ = false;
};

namespace detail {
// Accumulates src into the (lazily allocated) gradient buffer of impl.
void accumulate_grad(TensorImpl& impl, const std::vector<float>& src);
}  // namespace detail

}  // namespace scn
