#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dragan {

using Shape = std::vector<int64_t>;

enum class DType { f32, f64 };

template <typename T>
struct dtype_of;
template <>
struct dtype_of<float> {
  static constexpr DType value = DType::f32;
};
template <>
struct dtype_of<double> {
  static constexpr DType value = DType::f64;
};

std::string_view dtype_name(DType d);
std::string shape_str(const Shape& shape);

/// Number of elements described by a shape. Throws on non-positive extents.
int64_t shape_numel(const Shape& shape);

/// Dense row-major N-dimensional array. Images are laid out [N, C, H, W].
///
/// Every extent is positive and `numel() == data().size()` holds for any
/// constructed tensor. A default-constructed tensor is empty (rank 0, no
/// data) and only useful as a placeholder.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), T(0)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), T(1)); }
  static Tensor full(Shape shape, T v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(T v) { return Tensor(Shape{1}, v); }
  static Tensor from(Shape shape, std::initializer_list<T> values) {
    return Tensor(std::move(shape), std::vector<T>(values));
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }
  static constexpr DType dtype() { return dtype_of<T>::value; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  /// 4-D accessor for [N, C, H, W] tensors; unchecked.
  T& at(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  const T& at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  /// Value of a single-element tensor.
  T item() const;

  /// Same data under a new shape with the same element count.
  Tensor reshaped(Shape shape) const;

  /// Converts element type (f32 <-> f64).
  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// Bitwise equality, including the sign of zero and NaN payloads.
template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b);

/// Channels [start, start + count) of a 4-D tensor.
template <typename T>
Tensor<T> slice_channels_copy(const Tensor<T>& x, int64_t start, int64_t count);

/// Sample n of a batch, keeping a leading batch extent of 1.
template <typename T>
Tensor<T> take_sample(const Tensor<T>& x, int64_t n);

/// Stacks same-shaped tensors along a new (or existing size-1) batch axis.
template <typename T>
Tensor<T> stack_samples(std::span<const Tensor<T>> items);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace dragan
