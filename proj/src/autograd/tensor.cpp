#include "vasr/autograd/tensor.hpp"

#include <sstream>

namespace vasr::autograd {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor() : impl_(std::make_shared<detail::TensorStorage>()) {
  impl_->shape = {1};
  impl_->values = {0.0};
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<detail::TensorStorage>()) {
  if (shape.empty()) shape = {1};
  for (auto d : shape) {
    if (d == 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_to_string(shape));
    }
  }
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->values = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::matrix(const std::vector<std::vector<double>>& rows,
                      bool requires_grad) {
  if (rows.empty() || rows.front().empty()) {
    throw DimensionError("matrix literal must be non-empty");
  }
  const auto cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    if (row.size() != cols) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(values), requires_grad);
}

std::size_t Tensor::size(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_to_string(impl_->shape));
  }
  return impl_->shape[axis];
}

std::size_t Tensor::rows() const {
  if (dim() != 2) {
    throw DimensionError("expected a 2-D tensor, got " +
                         shape_to_string(impl_->shape));
  }
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (dim() != 2) {
    throw DimensionError("expected a 2-D tensor, got " +
                         shape_to_string(impl_->shape));
  }
  return impl_->shape[1];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on non-scalar " + shape_to_string(shape()));
  }
  return impl_->values[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return impl_->values[r * cols() + c];
}

std::span<const double> Tensor::grad() const {
  if (!impl_->grad) return {};
  return *impl_->grad;
}

std::vector<double>& Tensor::grad_buffer() const {
  if (!impl_->grad) impl_->grad.emplace(impl_->values.size(), 0.0);
  return *impl_->grad;
}

Tensor Tensor::clone() const {
  Tensor copy(impl_->shape, impl_->values, impl_->requires_grad);
  copy.impl_->grad = impl_->grad;
  return copy;
}

}  // namespace vasr::autograd
