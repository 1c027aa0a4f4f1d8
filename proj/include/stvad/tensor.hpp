#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace stvad {

/// Dense row-major tensor. Layout conventions used throughout:
///   rank-1: (c)            bias vectors, score series
///   rank-3: (h, w, c)      frames and feature maps, channels fastest
///   rank-4: (l, h, w, c)   sequences and 3D feature volumes
/// Kernels are stored (kh, kw, c_in, c_out) / (kd, kh, kw, c_in, c_out) so
/// the output-channel loop runs over contiguous memory.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    for (int d : shape_) {
      if (d < 1) throw std::invalid_argument("Tensor: all dimensions must be >= 1");
    }
    data_.assign(count(shape_), T(0));
  }

  Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const {
    assert(i >= 0 && i < rank());
    return shape_[static_cast<std::size_t>(i)];
  }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) {
    assert(i < data_.size());
    return data_[i];
  }
  T operator[](std::size_t i) const {
    assert(i < data_.size());
    return data_[i];
  }

  // (h, w, c) access
  T& at(int y, int x, int c) {
    assert(rank() == 3);
    return data_[idx3(y, x, c)];
  }
  const T& at(int y, int x, int c) const {
    assert(rank() == 3);
    return data_[idx3(y, x, c)];
  }

  // (l, h, w, c) access
  T& at(int l, int y, int x, int c) {
    assert(rank() == 4);
    return data_[idx4(l, y, x, c)];
  }
  const T& at(int l, int y, int x, int c) const {
    assert(rank() == 4);
    return data_[idx4(l, y, x, c)];
  }

  void set_zero() { data_.assign(data_.size(), T(0)); }
  void fill(T v) { data_.assign(data_.size(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

 private:
  static std::size_t count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }

  std::size_t idx3(int y, int x, int c) const {
    assert(y >= 0 && y < shape_[0] && x >= 0 && x < shape_[1] && c >= 0 && c < shape_[2]);
    return (static_cast<std::size_t>(y) * shape_[1] + x) * shape_[2] + c;
  }
  std::size_t idx4(int l, int y, int x, int c) const {
    assert(l >= 0 && l < shape_[0] && y >= 0 && y < shape_[1] && x >= 0 && x < shape_[2] &&
           c >= 0 && c < shape_[3]);
    return ((static_cast<std::size_t>(l) * shape_[1] + y) * shape_[2] + x) * shape_[3] + c;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Channel-wise concatenation of two (h, w, c) maps.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1))
    throw std::invalid_argument("concat_channels: spatial shapes differ");
  Tensor<T> out({a.dim(0), a.dim(1), a.dim(2) + b.dim(2)});
  const int ca = a.dim(2), cb = b.dim(2);
  for (int y = 0; y < a.dim(0); ++y)
    for (int x = 0; x < a.dim(1); ++x) {
      for (int c = 0; c < ca; ++c) out.at(y, x, c) = a.at(y, x, c);
      for (int c = 0; c < cb; ++c) out.at(y, x, ca + c) = b.at(y, x, c);
    }
  return out;
}

/// Extracts channels [c0, c1) of a (h, w, c) map.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int c1) {
  if (x.rank() != 3 || c0 < 0 || c1 > x.dim(2) || c0 >= c1)
    throw std::invalid_argument("slice_channels: bad range");
  Tensor<T> out({x.dim(0), x.dim(1), c1 - c0});
  for (int y = 0; y < x.dim(0); ++y)
    for (int xx = 0; xx < x.dim(1); ++xx)
      for (int c = c0; c < c1; ++c) out.at(y, xx, c - c0) = x.at(y, xx, c);
  return out;
}

/// Extracts temporal slice l of an (l, h, w, c) volume as an (h, w, c) map.
template <typename T>
Tensor<T> slice_time(const Tensor<T>& x, int l) {
  if (x.rank() != 4 || l < 0 || l >= x.dim(0))
    throw std::invalid_argument("slice_time: bad index");
  Tensor<T> out({x.dim(1), x.dim(2), x.dim(3)});
  const T* src = x.data() + out.size() * static_cast<std::size_t>(l);
  std::copy(src, src + out.size(), out.data());
  return out;
}

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  assert(dst.same_shape(src));
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace stvad
