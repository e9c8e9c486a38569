#include "scn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace scn {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

namespace {

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, bool requires_grad) {
  for (int d : shape) {
    if (d <= 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_str(shape));
    }
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->requires_grad = requires_grad;
  impl->data.resize(static_cast<size_t>(shape_numel(shape)));
  impl->shape = std::move(shape);
  return impl;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return Tensor(make_impl(std::move(shape), requires_grad));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  auto impl = make_impl(std::move(shape), requires_grad);
  for (auto& v : impl->data) v = value;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data,
                         bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  auto impl = make_impl(std::move(shape), requires_grad);
  impl->data = std::move(data);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(float value) { return from_data({1}, {value}); }

std::vector<float>& Tensor::grad() {
  if (impl_->grad.empty()) impl_->grad.resize(impl_->data.size(), 0.0f);
  return impl_->grad;
}

const std::vector<float>& Tensor::grad() const {
  if (impl_->grad.empty()) impl_->grad.resize(impl_->data.size(), 0.0f);
  return impl_->grad;
}

void Tensor::zero_grad() {
  for (auto& g : impl_->grad) g = 0.0f;
}

float Tensor::item() const {
  if (numel() != 1) {
    throw UsageError("item() requires a single-element tensor, shape is " +
                     shape_str(shape()));
  }
  return impl_->data[0];
}

float Tensor::at2(int i, int j) const {
  return impl_->data[static_cast<size_t>(i) * dim(1) + j];
}

float Tensor::at4(int n, int c, int h, int w) const {
  const size_t idx =
      ((static_cast<size_t>(n) * dim(1) + c) * dim(2) + h) * dim(3) + w;
  return impl_->data[idx];
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(std::move(impl));
}

void Tensor::check_finite(const std::string& what) const {
  for (float v : impl_->data) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value in " + what);
    }
  }
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) {
    throw UsageError(
        "backward called twice on the same tape; reset() it between steps");
  }
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward requires a scalar loss");
  }
  consumed_ = true;
  Tensor seed = loss;  // handles share storage
  seed.grad()[0] = 1.0f;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    it->backward();
  }
}

namespace detail {

void accumulate_grad(TensorImpl& impl, const std::vector<float>& src) {
  if (impl.grad.empty()) impl.grad.resize(impl.data.size(), 0.0f);
  for (size_t i = 0; i < src.size(); ++i) impl.grad[i] += src[i];
}

}  // namespace detail

}  // namespace scn
