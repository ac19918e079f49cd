#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pcgssl/core/error.hpp"

namespace pcgssl::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

/// Dense row-major array with an optional gradient slot of the same shape.
template <std::floating_point T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (numel(shape_) != data_.size()) {
      fail(Errc::ShapeMismatch, "shape " + shape_string(shape_) + " does not hold " + std::to_string(data_.size()) + " values");
    }
  }

  static Tensor scalar(T value) { return Tensor(Shape{1}, std::vector<T>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  T item() const {
    require(data_.size() == 1, Errc::ShapeMismatch, "item() needs a one-element tensor, got " + shape_string(shape_));
    return data_[0];
  }

  bool has_grad() const noexcept { return grad_.size() == data_.size() && !data_.empty(); }

  /// Gradient slot, allocated as zeros on first use.
  std::span<T> grad() {
    if (grad_.size() != data_.size()) grad_.assign(data_.size(), T(0));
    return grad_;
  }
  std::span<const T> grad() const noexcept { return grad_; }

  void zero_grad() { std::fill(grad_.begin(), grad_.end(), T(0)); }
  void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

  template <std::floating_point U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  /// Same shape and bit-identical values; gradients are not compared.
  bool operator==(const Tensor& other) const { return shape_ == other.shape_ && data_ == other.data_; }

 private:
  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
};

}  // namespace pcgssl::nn
