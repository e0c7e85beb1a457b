#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agit/errors.hpp"
#include "agit/nn/layers.hpp"
#include "agit/rng.hpp"
#include "agit/tensor.hpp"

namespace agit {

// Architecture description for a critic network: a stack of 4x4 convolutions
// with leaky rectifiers, the last stage at stride 1, pooled to a single
// unbounded score per image.
struct DiscriminatorSpec {
  std::vector<std::string> tokens = {"C64", "C128", "C256", "C512", "C512"};
  std::int64_t in_channels = 3;
  double channel_scale = 1.0;
  bool first_block_norm = false;
  double leaky_slope = 0.2;

  static DiscriminatorSpec standard(double channel_scale, std::int64_t in_channels, bool first_block_norm = false) {
    DiscriminatorSpec s;
    s.channel_scale = channel_scale;
    s.in_channels = in_channels;
    s.first_block_norm = first_block_norm;
    return s;
  }

  std::int64_t scaled(std::int64_t width) const {
    const auto w = static_cast<std::int64_t>(width * channel_scale);
    return w < 4 ? 4 : w;
  }

  void validate() const {
    if (channel_scale <= 0.0 || channel_scale > 1.0) {
      throw ContractError("discriminator channel_scale must lie in (0, 1]");
    }
    if (in_channels != 3 && in_channels != 4) {
      throw ContractError("discriminator input must have 3 or 4 channels");
    }
    if (tokens.size() < 2) throw ContractError("discriminator needs at least two blocks");
    for (const auto& t : tokens) {
      if (t.empty() || t[0] != 'C') throw ContractError("unknown discriminator layer token: " + t);
    }
  }

  // Spatial extents of every feature map for a square input, ending with the
  // pre-pooling map. Stride 2 everywhere except the final block.
  std::vector<std::int64_t> feature_trace(std::int64_t input_size) const {
    std::vector<std::int64_t> trace;
    std::int64_t s = input_size;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::int64_t stride = i + 1 == tokens.size() ? 1 : 2;
      s = (s + 2 - 4) / stride + 1;
      trace.push_back(s);
    }
    return trace;
  }
};

template <typename T>
class Discriminator {
 public:
  explicit Discriminator(const DiscriminatorSpec& spec) : spec_(spec) {
    spec_.validate();
    std::int64_t width = spec_.in_channels;
    for (std::size_t i = 0; i < spec_.tokens.size(); ++i) {
      const std::int64_t out = spec_.scaled(std::stoll(spec_.tokens[i].substr(1)));
      const bool last = i + 1 == spec_.tokens.size();
      const bool norm = last ? false : (i == 0 ? spec_.first_block_norm : true);
      net_.template add<nn::Conv2d<T>>(width, out, 4, last ? 1 : 2, 1);
      if (norm) net_.template add<nn::BatchNorm2d<T>>(out);
      net_.template add<nn::LeakyReLU<T>>(spec_.leaky_slope);
      width = out;
    }
    net_.template add<nn::GlobalAvgPool<T>>();
    net_.template add<nn::Conv2d<T>>(width, 1, 1, 1, 0);
  }

  const DiscriminatorSpec& spec() const { return spec_; }

  // One unbounded real score per batch item.
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (x.rank() != 4 || x.channels() != spec_.in_channels) {
      throw DimensionError("discriminator input: channel axis is " +
                           std::to_string(x.rank() == 4 ? x.channels() : -1) + ", expected " +
                           std::to_string(spec_.in_channels));
    }
    Tensor<T> y = net_.forward(x, train);
    return y.reshaped({y.batch()});
  }

  // d_scores has shape (N,); returns the gradient w.r.t. the input batch.
  Tensor<T> backward(const Tensor<T>& d_scores) {
    return net_.backward(d_scores.reshaped({d_scores.dim(0), 1, 1, 1}));
  }

  void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& params,
               std::vector<nn::BufferRef<T>>& buffers) {
    net_.collect(prefix, params, buffers);
  }

  std::vector<nn::ParamRef<T>> parameters(const std::string& prefix = "") {
    std::vector<nn::ParamRef<T>> params;
    std::vector<nn::BufferRef<T>> buffers;
    collect(prefix, params, buffers);
    return params;
  }

  std::int64_t count_parameters() {
    auto params = parameters();
    return nn::count_parameters(params);
  }

  void init_params(Rng& rng) { net_.init_params(rng); }
  void clear_cache() { net_.clear_cache(); }

 private:
  DiscriminatorSpec spec_;
  nn::Sequential<T> net_;
};

template <typename T>
Tensor<T> discriminate(Discriminator<T>& d, const Tensor<T>& img, bool train = false) {
  return d.forward(img, train);
}

// Scores a (mask, image) pair through a 4-channel critic, the mask stacked
// in front of the image channels.
template <typename T>
Tensor<T> discriminate_attended(Discriminator<T>& d, const Tensor<T>& mask, const Tensor<T>& img,
                                bool train = false) {
  if (mask.batch() != img.batch() || mask.height() != img.height() || mask.width() != img.width() ||
      mask.channels() != 1) {
    throw DimensionError("attended critic: mask " + Tensor<T>::dims_to_string(mask.dims()) +
                         " does not align with image " + Tensor<T>::dims_to_string(img.dims()));
  }
  return d.forward(concat_channels(mask, img), train);
}

}  // namespace agit
