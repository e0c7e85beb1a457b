#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agit/errors.hpp"

namespace agit {

// Dense row-major tensor of rank <= 4.
// Conventions used throughout: activations are (n, c, h, w), convolution
// weights (out, in, kh, kw), per-channel vectors (c), score vectors (n).
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
    data_.assign(static_cast<std::size_t>(numel_of(dims_)), T(0));
  }

  Tensor(std::vector<std::int64_t> dims, std::vector<T> values) : dims_(std::move(dims)), data_(std::move(values)) {
    if (static_cast<std::int64_t>(data_.size()) != numel_of(dims_)) {
      throw DimensionError("tensor value count " + std::to_string(data_.size()) + " does not match dims " +
                           dims_to_string(dims_));
    }
  }

  std::int64_t rank() const { return static_cast<std::int64_t>(dims_.size()); }
  std::int64_t dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
  const std::vector<std::int64_t>& dims() const { return dims_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  // rank-4 accessors
  std::int64_t batch() const { return dims_[0]; }
  std::int64_t channels() const { return dims_[1]; }
  std::int64_t height() const { return dims_[2]; }
  std::int64_t width() const { return dims_[3]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data_[static_cast<std::size_t>(((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
  }
  const T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return data_[static_cast<std::size_t>(((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(T(0)); }

  bool same_dims(const Tensor& o) const { return dims_ == o.dims_; }

  Tensor reshaped(std::vector<std::int64_t> dims) const {
    if (numel_of(dims) != numel()) {
      throw DimensionError("cannot reshape " + dims_to_string(dims_) + " to " + dims_to_string(dims));
    }
    Tensor out;
    out.dims_ = std::move(dims);
    out.data_ = data_;
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(dims_);
    for (std::int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[static_cast<std::size_t>(i)]);
    return out;
  }

  void add(const Tensor& o) {
    check_same(o, "add");
    for (std::int64_t i = 0; i < numel(); ++i) data_[static_cast<std::size_t>(i)] += o[i];
  }

  void add_scaled(const Tensor& o, T a) {
    check_same(o, "add_scaled");
    for (std::int64_t i = 0; i < numel(); ++i) data_[static_cast<std::size_t>(i)] += a * o[i];
  }

  void scale(T a) {
    for (auto& v : data_) v *= a;
  }

  bool all_finite() const {
    for (const auto& v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  std::pair<T, T> min_max() const {
    T lo = data_.empty() ? T(0) : data_[0];
    T hi = lo;
    for (const auto& v : data_) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    return {lo, hi};
  }

  static std::int64_t numel_of(const std::vector<std::int64_t>& dims) {
    std::int64_t n = 1;
    for (auto d : dims) {
      if (d < 0) throw DimensionError("negative dimension in " + dims_to_string(dims));
      n *= d;
    }
    return n;
  }

  static std::string dims_to_string(const std::vector<std::int64_t>& dims) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? ", " : "") << dims[i];
    os << ")";
    return os.str();
  }

 private:
  void check_same(const Tensor& o, const char* what) const {
    if (!same_dims(o)) {
      throw DimensionError(std::string(what) + ": dims " + dims_to_string(dims_) + " vs " + dims_to_string(o.dims_));
    }
  }

  std::vector<std::int64_t> dims_;
  std::vector<T> data_;
};

// Channel-wise concatenation of rank-4 tensors with equal (n, h, w).
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.batch() != b.batch() || a.height() != b.height() || a.width() != b.width()) {
    throw DimensionError("concat_channels: mismatched batch or spatial dims " +
                         Tensor<T>::dims_to_string(a.dims()) + " vs " + Tensor<T>::dims_to_string(b.dims()));
  }
  Tensor<T> out({a.batch(), a.channels() + b.channels(), a.height(), a.width()});
  const std::int64_t plane = a.height() * a.width();
  for (std::int64_t n = 0; n < a.batch(); ++n) {
    T* dst = out.data() + n * out.channels() * plane;
    const T* pa = a.data() + n * a.channels() * plane;
    const T* pb = b.data() + n * b.channels() * plane;
    std::copy(pa, pa + a.channels() * plane, dst);
    std::copy(pb, pb + b.channels() * plane, dst + a.channels() * plane);
  }
  return out;
}

// Inverse of concat_channels for gradients: splits the leading c_a channels from the rest.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::int64_t c_a) {
  Tensor<T> a({x.batch(), c_a, x.height(), x.width()});
  Tensor<T> b({x.batch(), x.channels() - c_a, x.height(), x.width()});
  const std::int64_t plane = x.height() * x.width();
  for (std::int64_t n = 0; n < x.batch(); ++n) {
    const T* src = x.data() + n * x.channels() * plane;
    std::copy(src, src + c_a * plane, a.data() + n * c_a * plane);
    std::copy(src + c_a * plane, src + x.channels() * plane, b.data() + n * b.channels() * plane);
  }
  return {std::move(a), std::move(b)};
}

// Extracts sample n as a batch-1 tensor.
template <typename T>
Tensor<T> slice_sample(const Tensor<T>& x, std::int64_t n) {
  Tensor<T> out({1, x.channels(), x.height(), x.width()});
  const std::int64_t stride = x.channels() * x.height() * x.width();
  std::copy(x.data() + n * stride, x.data() + (n + 1) * stride, out.data());
  return out;
}

template <typename T>
void set_sample(Tensor<T>& dst, std::int64_t n, const Tensor<T>& sample) {
  const std::int64_t stride = dst.channels() * dst.height() * dst.width();
  if (sample.numel() != stride) throw DimensionError("set_sample: size mismatch");
  std::copy(sample.data(), sample.data() + stride, dst.data() + n * stride);
}

}  // namespace agit
