#include "dragan/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace dragan {

std::string_view dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e <= 0) throw std::invalid_argument("non-positive extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_)), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size())) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
  }
}

template <typename T>
T Tensor<T>::item() const {
  if (data_.size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + shape_str(shape_));
  }
  return data_[0];
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw std::invalid_argument("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.ptr(), b.ptr(), static_cast<size_t>(a.numel()) * sizeof(T)) == 0;
}

template <typename T>
Tensor<T> slice_channels_copy(const Tensor<T>& x, int64_t start, int64_t count) {
  if (x.rank() != 4 || start < 0 || count <= 0 || start + count > x.dim(1)) {
    throw std::invalid_argument("bad channel slice of " + shape_str(x.shape()));
  }
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<T> out({n, count, x.dim(2), x.dim(3)});
  for (int64_t i = 0; i < n; ++i) {
    std::memcpy(out.ptr() + i * count * hw, x.ptr() + (i * c + start) * hw,
                static_cast<size_t>(count * hw) * sizeof(T));
  }
  return out;
}

template <typename T>
Tensor<T> take_sample(const Tensor<T>& x, int64_t n) {
  if (x.rank() < 1 || n < 0 || n >= x.dim(0)) {
    throw std::out_of_range("sample index out of range for " + shape_str(x.shape()));
  }
  Shape s = x.shape();
  s[0] = 1;
  const int64_t per = x.numel() / x.dim(0);
  std::vector<T> d(x.data().begin() + n * per, x.data().begin() + (n + 1) * per);
  return Tensor<T>(std::move(s), std::move(d));
}

template <typename T>
Tensor<T> stack_samples(std::span<const Tensor<T>> items) {
  if (items.empty()) throw std::invalid_argument("stack_samples: empty input");
  Shape inner = items[0].shape();
  if (!inner.empty() && inner[0] == 1 && inner.size() > 1) inner.erase(inner.begin());
  std::vector<T> d;
  d.reserve(static_cast<size_t>(items[0].numel()) * items.size());
  for (const auto& t : items) {
    if (t.numel() != items[0].numel()) {
      throw std::invalid_argument("stack_samples: mismatched sample sizes");
    }
    d.insert(d.end(), t.data().begin(), t.data().end());
  }
  Shape s{static_cast<int64_t>(items.size())};
  s.insert(s.end(), inner.begin(), inner.end());
  return Tensor<T>(std::move(s), std::move(d));
}

template class Tensor<float>;
template class Tensor<double>;

#define DRAGAN_INSTANTIATE(T)                                                      \
  template bool bitwise_equal<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> slice_channels_copy<T>(const Tensor<T>&, int64_t, int64_t);   \
  template Tensor<T> take_sample<T>(const Tensor<T>&, int64_t);                    \
  template Tensor<T> stack_samples<T>(std::span<const Tensor<T>>);

DRAGAN_INSTANTIATE(float)
DRAGAN_INSTANTIATE(double)

}  // namespace dragan
