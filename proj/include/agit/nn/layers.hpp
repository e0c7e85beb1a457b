#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "agit/blas.hpp"
#include "agit/errors.hpp"
#include "agit/rng.hpp"
#include "agit/tensor.hpp"

namespace agit::nn {

template <typename T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;

  explicit Param(std::vector<std::int64_t> dims = {}) : value(std::move(dims)) { grad = Tensor<T>(value.dims()); }

  void zero_grad() { grad.zero(); }
};

template <typename T>
struct ParamRef {
  std::string name;
  Param<T>* param;
};

template <typename T>
struct BufferRef {
  std::string name;
  Tensor<T>* value;
};

// Base class for differentiable layers.
//
// Each forward call in training mode pushes whatever the matching backward
// needs onto an internal stack, and each backward pops exactly one entry.
// This lets one layer instance run several forward passes per optimization
// step (the cycle pass reuses both generators) as long as the backwards
// happen in reverse order of the forwards.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor<T> forward(const Tensor<T>& x, bool train) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

  virtual void collect(const std::string& /*prefix*/, std::vector<ParamRef<T>>& /*params*/,
                       std::vector<BufferRef<T>>& /*buffers*/) {}
  virtual void init_params(Rng& /*rng*/) {}
  virtual void clear_cache() {}
};

namespace detail {

// Unrolls (c, h, w) into a (c*k*k, oh*ow) matrix with zero padding, so a
// convolution becomes one matrix product.
template <typename T>
void im2col(const T* img, std::int64_t c, std::int64_t h, std::int64_t w, std::int64_t k, std::int64_t stride,
            std::int64_t pad, std::int64_t oh, std::int64_t ow, T* col) {
  for (std::int64_t cc = 0; cc < c; ++cc) {
    for (std::int64_t ki = 0; ki < k; ++ki) {
      for (std::int64_t kj = 0; kj < k; ++kj) {
        T* dst = col + ((cc * k + ki) * k + kj) * oh * ow;
        for (std::int64_t oi = 0; oi < oh; ++oi) {
          const std::int64_t ii = oi * stride - pad + ki;
          T* drow = dst + oi * ow;
          if (ii < 0 || ii >= h) {
            std::fill(drow, drow + ow, T(0));
            continue;
          }
          const T* srow = img + (cc * h + ii) * w;
          for (std::int64_t oj = 0; oj < ow; ++oj) {
            const std::int64_t jj = oj * stride - pad + kj;
            drow[oj] = (jj >= 0 && jj < w) ? srow[jj] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters a column matrix back onto the image grid,
// accumulating into img (caller zeroes it first).
template <typename T>
void col2im(const T* col, std::int64_t c, std::int64_t h, std::int64_t w, std::int64_t k, std::int64_t stride,
            std::int64_t pad, std::int64_t oh, std::int64_t ow, T* img) {
  for (std::int64_t cc = 0; cc < c; ++cc) {
    for (std::int64_t ki = 0; ki < k; ++ki) {
      for (std::int64_t kj = 0; kj < k; ++kj) {
        const T* src = col + ((cc * k + ki) * k + kj) * oh * ow;
        for (std::int64_t oi = 0; oi < oh; ++oi) {
          const std::int64_t ii = oi * stride - pad + ki;
          if (ii < 0 || ii >= h) continue;
          const T* srow = src + oi * ow;
          T* drow = img + (cc * h + ii) * w;
          for (std::int64_t oj = 0; oj < ow; ++oj) {
            const std::int64_t jj = oj * stride - pad + kj;
            if (jj >= 0 && jj < w) drow[jj] += srow[oj];
          }
        }
      }
    }
  }
}

inline std::int64_t conv_out_size(std::int64_t in, std::int64_t k, std::int64_t stride, std::int64_t pad,
                                  const char* axis) {
  const std::int64_t out = (in + 2 * pad - k) / stride + 1;
  if (in + 2 * pad < k || out < 1) {
    throw DimensionError(std::string("convolution ") + axis + " too small: input extent " + std::to_string(in) +
                         " with kernel " + std::to_string(k) + " pad " + std::to_string(pad));
  }
  return out;
}

}  // namespace detail

template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel, std::int64_t stride,
         std::int64_t pad, bool bias = true)
      : in_(in_channels),
        out_(out_channels),
        k_(kernel),
        stride_(stride),
        pad_(pad),
        has_bias_(bias),
        weight_({out_channels, in_channels, kernel, kernel}),
        bias_(bias ? std::vector<std::int64_t>{out_channels} : std::vector<std::int64_t>{0}) {}

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    if (x.channels() != in_) {
      throw DimensionError("conv: channel axis is " + std::to_string(x.channels()) + ", expected " +
                           std::to_string(in_));
    }
    const std::int64_t oh = detail::conv_out_size(x.height(), k_, stride_, pad_, "height");
    const std::int64_t ow = detail::conv_out_size(x.width(), k_, stride_, pad_, "width");
    const std::int64_t ckk = in_ * k_ * k_;
    const std::int64_t cols = oh * ow;

    Tensor<T> y({x.batch(), out_, oh, ow});
    std::vector<T> col(static_cast<std::size_t>(ckk * cols));
    for (std::int64_t n = 0; n < x.batch(); ++n) {
      detail::im2col(x.data() + n * in_ * x.height() * x.width(), in_, x.height(), x.width(), k_, stride_, pad_, oh,
                     ow, col.data());
      gemm(false, false, out_, cols, ckk, T(1), weight_.value.data(), ckk, col.data(), cols, T(0),
           y.data() + n * out_ * cols, cols);
      if (has_bias_) {
        for (std::int64_t o = 0; o < out_; ++o) {
          T* row = y.data() + (n * out_ + o) * cols;
          const T b = bias_.value[o];
          for (std::int64_t p = 0; p < cols; ++p) row[p] += b;
        }
      }
    }
    if (train) inputs_.push_back(x);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (inputs_.empty()) throw ContractError("conv backward without matching forward");
    Tensor<T> x = std::move(inputs_.back());
    inputs_.pop_back();

    const std::int64_t oh = g.height();
    const std::int64_t ow = g.width();
    const std::int64_t ckk = in_ * k_ * k_;
    const std::int64_t cols = oh * ow;

    Tensor<T> gx(x.dims());
    std::vector<T> col(static_cast<std::size_t>(ckk * cols));
    for (std::int64_t n = 0; n < x.batch(); ++n) {
      const T* gn = g.data() + n * out_ * cols;

      detail::im2col(x.data() + n * in_ * x.height() * x.width(), in_, x.height(), x.width(), k_, stride_, pad_, oh,
                     ow, col.data());
      gemm(false, true, out_, ckk, cols, T(1), gn, cols, col.data(), cols, T(1), weight_.grad.data(), ckk);

      if (has_bias_) {
        for (std::int64_t o = 0; o < out_; ++o) {
          T s = 0;
          const T* row = gn + o * cols;
          for (std::int64_t p = 0; p < cols; ++p) s += row[p];
          bias_.grad[o] += s;
        }
      }

      gemm(true, false, ckk, cols, out_, T(1), weight_.value.data(), ckk, gn, cols, T(0), col.data(), cols);
      detail::col2im(col.data(), in_, x.height(), x.width(), k_, stride_, pad_, oh, ow,
                     gx.data() + n * in_ * x.height() * x.width());
    }
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    (void)buffers;
    params.push_back({prefix + "weight", &weight_});
    if (has_bias_) params.push_back({prefix + "bias", &bias_});
  }

  void init_params(Rng& rng) override {
    for (std::int64_t i = 0; i < weight_.value.numel(); ++i) weight_.value[i] = static_cast<T>(rng.normal(0.0, 0.02));
    if (has_bias_) bias_.value.zero();
  }

  void clear_cache() override { inputs_.clear(); }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  std::int64_t in_, out_, k_, stride_, pad_;
  bool has_bias_;
  Param<T> weight_;
  Param<T> bias_;
  std::vector<Tensor<T>> inputs_;
};

template <typename T>
class ConvTranspose2d : public Layer<T> {
 public:
  ConvTranspose2d(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel, std::int64_t stride,
                  std::int64_t pad, std::int64_t output_pad)
      : in_(in_channels),
        out_(out_channels),
        k_(kernel),
        stride_(stride),
        pad_(pad),
        opad_(output_pad),
        weight_({in_channels, out_channels, kernel, kernel}),
        bias_({out_channels}) {
    if (opad_ >= stride_) throw ContractError("transposed conv output padding must be below the stride");
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    if (x.channels() != in_) {
      throw DimensionError("transposed conv: channel axis is " + std::to_string(x.channels()) + ", expected " +
                           std::to_string(in_));
    }
    const std::int64_t ih = x.height(), iw = x.width();
    const std::int64_t oh = (ih - 1) * stride_ - 2 * pad_ + k_ + opad_;
    const std::int64_t ow = (iw - 1) * stride_ - 2 * pad_ + k_ + opad_;
    if (oh < 1 || ow < 1) throw DimensionError("transposed conv output collapses to zero extent");
    const std::int64_t okk = out_ * k_ * k_;
    const std::int64_t cols = ih * iw;

    Tensor<T> y({x.batch(), out_, oh, ow});
    std::vector<T> col(static_cast<std::size_t>(okk * cols));
    for (std::int64_t n = 0; n < x.batch(); ++n) {
      // y_n = scatter(W^T x_n): the exact adjoint of a stride-s convolution.
      gemm(true, false, okk, cols, in_, T(1), weight_.value.data(), okk, x.data() + n * in_ * cols, cols, T(0),
           col.data(), cols);
      detail::col2im(col.data(), out_, oh, ow, k_, stride_, pad_, ih, iw, y.data() + n * out_ * oh * ow);
      for (std::int64_t o = 0; o < out_; ++o) {
        T* row = y.data() + (n * out_ + o) * oh * ow;
        const T b = bias_.value[o];
        for (std::int64_t p = 0; p < oh * ow; ++p) row[p] += b;
      }
    }
    if (train) inputs_.push_back(x);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (inputs_.empty()) throw ContractError("transposed conv backward without matching forward");
    Tensor<T> x = std::move(inputs_.back());
    inputs_.pop_back();

    const std::int64_t ih = x.height(), iw = x.width();
    const std::int64_t oh = g.height(), ow = g.width();
    const std::int64_t okk = out_ * k_ * k_;
    const std::int64_t cols = ih * iw;

    Tensor<T> gx(x.dims());
    std::vector<T> col(static_cast<std::size_t>(okk * cols));
    for (std::int64_t n = 0; n < x.batch(); ++n) {
      const T* gn = g.data() + n * out_ * oh * ow;
      detail::im2col(gn, out_, oh, ow, k_, stride_, pad_, ih, iw, col.data());

      gemm(false, false, in_, cols, okk, T(1), weight_.value.data(), okk, col.data(), cols, T(0),
           gx.data() + n * in_ * cols, cols);
      gemm(false, true, in_, okk, cols, T(1), x.data() + n * in_ * cols, cols, col.data(), cols, T(1),
           weight_.grad.data(), okk);

      for (std::int64_t o = 0; o < out_; ++o) {
        T s = 0;
        const T* row = gn + o * oh * ow;
        for (std::int64_t p = 0; p < oh * ow; ++p) s += row[p];
        bias_.grad[o] += s;
      }
    }
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    (void)buffers;
    params.push_back({prefix + "weight", &weight_});
    params.push_back({prefix + "bias", &bias_});
  }

  void init_params(Rng& rng) override {
    for (std::int64_t i = 0; i < weight_.value.numel(); ++i) weight_.value[i] = static_cast<T>(rng.normal(0.0, 0.02));
    bias_.value.zero();
  }

  void clear_cache() override { inputs_.clear(); }

 private:
  std::int64_t in_, out_, k_, stride_, pad_, opad_;
  Param<T> weight_;
  Param<T> bias_;
  std::vector<Tensor<T>> inputs_;
};

template <typename T>
class BatchNorm2d : public Layer<T> {
 public:
  explicit BatchNorm2d(std::int64_t channels, double momentum = 0.1, double eps = 1e-5)
      : c_(channels), momentum_(momentum), eps_(eps), gamma_({channels}), beta_({channels}) {
    gamma_.value.fill(T(1));
    running_mean_ = Tensor<T>({channels});
    running_var_ = Tensor<T>({channels});
    running_var_.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    if (x.channels() != c_) {
      throw DimensionError("batchnorm: channel axis is " + std::to_string(x.channels()) + ", expected " +
                           std::to_string(c_));
    }
    const std::int64_t plane = x.height() * x.width();
    const std::int64_t m = x.batch() * plane;
    Tensor<T> y(x.dims());

    if (!train) {
      for (std::int64_t n = 0; n < x.batch(); ++n) {
        for (std::int64_t ch = 0; ch < c_; ++ch) {
          const T inv = T(1) / std::sqrt(running_var_[ch] + static_cast<T>(eps_));
          const T g = gamma_.value[ch], b = beta_.value[ch], mu = running_mean_[ch];
          const T* src = x.data() + (n * c_ + ch) * plane;
          T* dst = y.data() + (n * c_ + ch) * plane;
          for (std::int64_t p = 0; p < plane; ++p) dst[p] = g * (src[p] - mu) * inv + b;
        }
      }
      return y;
    }

    Cache cache;
    cache.x_hat = Tensor<T>(x.dims());
    cache.inv_std = Tensor<T>({c_});
    for (std::int64_t ch = 0; ch < c_; ++ch) {
      double sum = 0.0;
      for (std::int64_t n = 0; n < x.batch(); ++n) {
        const T* src = x.data() + (n * c_ + ch) * plane;
        for (std::int64_t p = 0; p < plane; ++p) sum += src[p];
      }
      const double mean = sum / static_cast<double>(m);
      double sq = 0.0;
      for (std::int64_t n = 0; n < x.batch(); ++n) {
        const T* src = x.data() + (n * c_ + ch) * plane;
        for (std::int64_t p = 0; p < plane; ++p) {
          const double d = src[p] - mean;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(m);
      const double inv = 1.0 / std::sqrt(var + eps_);
      cache.inv_std[ch] = static_cast<T>(inv);

      const T g = gamma_.value[ch], b = beta_.value[ch];
      for (std::int64_t n = 0; n < x.batch(); ++n) {
        const T* src = x.data() + (n * c_ + ch) * plane;
        T* xh = cache.x_hat.data() + (n * c_ + ch) * plane;
        T* dst = y.data() + (n * c_ + ch) * plane;
        for (std::int64_t p = 0; p < plane; ++p) {
          xh[p] = static_cast<T>((src[p] - mean) * inv);
          dst[p] = g * xh[p] + b;
        }
      }

      // Running statistics keep the unbiased variance, as the usual
      // convention has it, while normalization above uses the biased one.
      const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      running_mean_[ch] = static_cast<T>((1.0 - momentum_) * running_mean_[ch] + momentum_ * mean);
      running_var_[ch] = static_cast<T>((1.0 - momentum_) * running_var_[ch] + momentum_ * unbiased);
    }
    caches_.push_back(std::move(cache));
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (caches_.empty()) throw ContractError("batchnorm backward without matching forward");
    Cache cache = std::move(caches_.back());
    caches_.pop_back();

    const std::int64_t plane = g.height() * g.width();
    const std::int64_t m = g.batch() * plane;
    Tensor<T> gx(g.dims());

    for (std::int64_t ch = 0; ch < c_; ++ch) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::int64_t n = 0; n < g.batch(); ++n) {
        const T* gr = g.data() + (n * c_ + ch) * plane;
        const T* xh = cache.x_hat.data() + (n * c_ + ch) * plane;
        for (std::int64_t p = 0; p < plane; ++p) {
          sum_dy += gr[p];
          sum_dy_xhat += static_cast<double>(gr[p]) * xh[p];
        }
      }
      gamma_.grad[ch] += static_cast<T>(sum_dy_xhat);
      beta_.grad[ch] += static_cast<T>(sum_dy);

      const double scale = gamma_.value[ch] * static_cast<double>(cache.inv_std[ch]) / static_cast<double>(m);
      for (std::int64_t n = 0; n < g.batch(); ++n) {
        const T* gr = g.data() + (n * c_ + ch) * plane;
        const T* xh = cache.x_hat.data() + (n * c_ + ch) * plane;
        T* dst = gx.data() + (n * c_ + ch) * plane;
        for (std::int64_t p = 0; p < plane; ++p) {
          dst[p] = static_cast<T>(scale * (static_cast<double>(m) * gr[p] - sum_dy - xh[p] * sum_dy_xhat));
        }
      }
    }
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    params.push_back({prefix + "gamma", &gamma_});
    params.push_back({prefix + "beta", &beta_});
    buffers.push_back({prefix + "running_mean", &running_mean_});
    buffers.push_back({prefix + "running_var", &running_var_});
  }

  void init_params(Rng& rng) override {
    for (std::int64_t i = 0; i < c_; ++i) gamma_.value[i] = static_cast<T>(rng.normal(1.0, 0.02));
    beta_.value.zero();
    running_mean_.zero();
    running_var_.fill(T(1));
  }

  void clear_cache() override { caches_.clear(); }

 private:
  struct Cache {
    Tensor<T> x_hat;
    Tensor<T> inv_std;
  };

  std::int64_t c_;
  double momentum_, eps_;
  Param<T> gamma_;
  Param<T> beta_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
  std::vector<Cache> caches_;
};

template <typename T>
class ReflectionPad2d : public Layer<T> {
 public:
  explicit ReflectionPad2d(std::int64_t pad) : p_(pad) {}

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    if (x.height() <= p_ || x.width() <= p_) {
      throw DimensionError("reflection pad " + std::to_string(p_) + " needs spatial extent above the pad width");
    }
    Tensor<T> y({x.batch(), x.channels(), x.height() + 2 * p_, x.width() + 2 * p_});
    for (std::int64_t n = 0; n < x.batch(); ++n) {
      for (std::int64_t c = 0; c < x.channels(); ++c) {
        const T* src = x.data() + (n * x.channels() + c) * x.height() * x.width();
        T* dst = y.data() + (n * x.channels() + c) * y.height() * y.width();
        for (std::int64_t i = 0; i < y.height(); ++i) {
          const std::int64_t si = reflect(i - p_, x.height());
          for (std::int64_t j = 0; j < y.width(); ++j) {
            dst[i * y.width() + j] = src[si * x.width() + reflect(j - p_, x.width())];
          }
        }
      }
    }
    if (train) shapes_.push_back({x.height(), x.width()});
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (shapes_.empty()) throw ContractError("reflection pad backward without matching forward");
    const auto [h, w] = shapes_.back();
    shapes_.pop_back();

    Tensor<T> gx({g.batch(), g.channels(), h, w});
    for (std::int64_t n = 0; n < g.batch(); ++n) {
      for (std::int64_t c = 0; c < g.channels(); ++c) {
        const T* src = g.data() + (n * g.channels() + c) * g.height() * g.width();
        T* dst = gx.data() + (n * g.channels() + c) * h * w;
        for (std::int64_t i = 0; i < g.height(); ++i) {
          const std::int64_t si = reflect(i - p_, h);
          for (std::int64_t j = 0; j < g.width(); ++j) {
            dst[si * w + reflect(j - p_, w)] += src[i * g.width() + j];
          }
        }
      }
    }
    return gx;
  }

  void clear_cache() override { shapes_.clear(); }

 private:
  static std::int64_t reflect(std::int64_t i, std::int64_t n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
  }

  std::int64_t p_;
  std::vector<std::pair<std::int64_t, std::int64_t>> shapes_;
};

template <typename T>
class ReLU : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> y(x.dims());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    if (train) outputs_.push_back(y);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (outputs_.empty()) throw ContractError("relu backward without matching forward");
    Tensor<T> y = std::move(outputs_.back());
    outputs_.pop_back();
    Tensor<T> gx(g.dims());
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] = y[i] > T(0) ? g[i] : T(0);
    return gx;
  }

  void clear_cache() override { outputs_.clear(); }

 private:
  std::vector<Tensor<T>> outputs_;
};

template <typename T>
class LeakyReLU : public Layer<T> {
 public:
  explicit LeakyReLU(double slope) : slope_(static_cast<T>(slope)) {}

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> y(x.dims());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : slope_ * x[i];
    if (train) outputs_.push_back(y);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (outputs_.empty()) throw ContractError("leaky relu backward without matching forward");
    Tensor<T> y = std::move(outputs_.back());
    outputs_.pop_back();
    Tensor<T> gx(g.dims());
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] = y[i] > T(0) ? g[i] : slope_ * g[i];
    return gx;
  }

  void clear_cache() override { outputs_.clear(); }

 private:
  T slope_;
  std::vector<Tensor<T>> outputs_;
};

template <typename T>
class Tanh : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> y(x.dims());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
    if (train) outputs_.push_back(y);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (outputs_.empty()) throw ContractError("tanh backward without matching forward");
    Tensor<T> y = std::move(outputs_.back());
    outputs_.pop_back();
    Tensor<T> gx(g.dims());
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] = g[i] * (T(1) - y[i] * y[i]);
    return gx;
  }

  void clear_cache() override { outputs_.clear(); }

 private:
  std::vector<Tensor<T>> outputs_;
};

template <typename T>
class Sigmoid : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> y(x.dims());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
    if (train) outputs_.push_back(y);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (outputs_.empty()) throw ContractError("sigmoid backward without matching forward");
    Tensor<T> y = std::move(outputs_.back());
    outputs_.pop_back();
    Tensor<T> gx(g.dims());
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] = g[i] * y[i] * (T(1) - y[i]);
    return gx;
  }

  void clear_cache() override { outputs_.clear(); }

 private:
  std::vector<Tensor<T>> outputs_;
};

template <typename T>
class GlobalAvgPool : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> y({x.batch(), x.channels(), 1, 1});
    const std::int64_t plane = x.height() * x.width();
    for (std::int64_t nc = 0; nc < x.batch() * x.channels(); ++nc) {
      double s = 0.0;
      const T* src = x.data() + nc * plane;
      for (std::int64_t p = 0; p < plane; ++p) s += src[p];
      y[nc] = static_cast<T>(s / static_cast<double>(plane));
    }
    if (train) shapes_.push_back({x.height(), x.width()});
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (shapes_.empty()) throw ContractError("pool backward without matching forward");
    const auto [h, w] = shapes_.back();
    shapes_.pop_back();
    Tensor<T> gx({g.batch(), g.channels(), h, w});
    const T inv = T(1) / static_cast<T>(h * w);
    for (std::int64_t nc = 0; nc < g.batch() * g.channels(); ++nc) {
      const T v = g[nc] * inv;
      T* dst = gx.data() + nc * h * w;
      for (std::int64_t p = 0; p < h * w; ++p) dst[p] = v;
    }
    return gx;
  }

  void clear_cache() override { shapes_.clear(); }

 private:
  std::vector<std::pair<std::int64_t, std::int64_t>> shapes_;
};

template <typename T>
class Sequential : public Layer<T> {
 public:
  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> cur = x;
    for (auto& l : layers_) cur = l->forward(cur, train);
    return cur;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    Tensor<T> cur = g;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i]->collect(prefix + "l" + std::to_string(i) + ".", params, buffers);
    }
  }

  void init_params(Rng& rng) override {
    for (auto& l : layers_) l->init_params(rng);
  }

  void clear_cache() override {
    for (auto& l : layers_) l->clear_cache();
  }

  std::size_t size() const { return layers_.size(); }

  Layer<T>& operator[](std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// Two 3x3 convolutions with a skip connection around them; no activation
// after the addition.
template <typename T>
class ResidualBlock : public Layer<T> {
 public:
  explicit ResidualBlock(std::int64_t channels) {
    body_.template add<ReflectionPad2d<T>>(1);
    body_.template add<Conv2d<T>>(channels, channels, 3, 1, 0);
    body_.template add<BatchNorm2d<T>>(channels);
    body_.template add<ReLU<T>>();
    body_.template add<ReflectionPad2d<T>>(1);
    body_.template add<Conv2d<T>>(channels, channels, 3, 1, 0);
    body_.template add<BatchNorm2d<T>>(channels);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> y = body_.forward(x, train);
    y.add(x);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    Tensor<T> gx = body_.backward(g);
    gx.add(g);
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    body_.collect(prefix, params, buffers);
  }

  void init_params(Rng& rng) override { body_.init_params(rng); }
  void clear_cache() override { body_.clear_cache(); }

 private:
  Sequential<T> body_;
};

// Total number of trainable scalars across a parameter collection.
template <typename T>
std::int64_t count_parameters(const std::vector<ParamRef<T>>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.param->value.numel();
  return n;
}

template <typename T>
void zero_grads(const std::vector<ParamRef<T>>& params) {
  for (const auto& p : params) p.param->zero_grad();
}

}  // namespace agit::nn
