#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agit/errors.hpp"
#include "agit/nn/layers.hpp"
#include "agit/rng.hpp"
#include "agit/tensor.hpp"

namespace agit {

// Architecture description for a translator network: an encoder with two
// stride-2 stages, six residual blocks, a mirrored decoder, and a final wide
// convolution whose channels split into content plus an optional attention
// head.
struct GeneratorSpec {
  std::vector<std::string> tokens;
  double channel_scale = 1.0;
  std::int64_t in_channels = 3;
  bool attention_head = true;
  std::string norm = "batch";
  std::string content_activation = "tanh";
  std::string mask_activation = "sigmoid";

  static GeneratorSpec standard(double channel_scale, bool attention_head) {
    GeneratorSpec s;
    s.channel_scale = channel_scale;
    s.attention_head = attention_head;
    s.tokens = {"c7s1_64", "d128", "d256", "R256", "R256", "R256",
                "R256",    "R256", "R256", "u128", "u64"};
    s.tokens.push_back(attention_head ? "c7s1_4" : "c7s1_3");
    return s;
  }

  std::int64_t head_channels() const { return attention_head ? 4 : 3; }

  // Filter widths shrink with channel_scale but never below 4; the head
  // width is the output format and is never scaled.
  std::int64_t scaled(std::int64_t width) const {
    const auto w = static_cast<std::int64_t>(width * channel_scale);
    return w < 4 ? 4 : w;
  }

  void validate() const {
    if (channel_scale <= 0.0 || channel_scale > 1.0) {
      throw ContractError("generator channel_scale must lie in (0, 1]");
    }
    if (norm != "batch") throw ContractError("unsupported generator norm kind: " + norm);
    if (content_activation != "tanh") throw ContractError("unsupported content activation: " + content_activation);
    if (mask_activation != "sigmoid") throw ContractError("unsupported mask activation: " + mask_activation);
    std::int64_t residuals = 0;
    for (const auto& t : tokens) {
      if (t.size() > 1 && t[0] == 'R') ++residuals;
    }
    if (residuals != 6) throw ContractError("generator needs exactly 6 residual blocks");
    if (tokens.empty() || tokens.back() != (attention_head ? "c7s1_4" : "c7s1_3")) {
      throw ContractError("generator must end in a head emitting " + std::to_string(head_channels()) + " channels");
    }
  }
};

// Content and attention outputs of one generator pass. The attention tensor
// is empty when the spec has no attention head.
template <typename T>
struct MaskPair {
  Tensor<T> content;
  Tensor<T> attention;
};

template <typename T>
class Generator {
 public:
  explicit Generator(const GeneratorSpec& spec) : spec_(spec) {
    spec_.validate();
    std::int64_t width = spec_.in_channels;
    for (std::size_t i = 0; i < spec_.tokens.size(); ++i) {
      const std::string& tok = spec_.tokens[i];
      const bool is_head = i + 1 == spec_.tokens.size();
      if (tok.rfind("c7s1_", 0) == 0) {
        const std::int64_t out = is_head ? spec_.head_channels() : spec_.scaled(std::stoll(tok.substr(5)));
        trunk_.template add<nn::ReflectionPad2d<T>>(3);
        trunk_.template add<nn::Conv2d<T>>(width, out, 7, 1, 0);
        if (!is_head) {
          trunk_.template add<nn::BatchNorm2d<T>>(out);
          trunk_.template add<nn::ReLU<T>>();
        }
        width = out;
      } else if (tok[0] == 'd') {
        const std::int64_t out = spec_.scaled(std::stoll(tok.substr(1)));
        trunk_.template add<nn::Conv2d<T>>(width, out, 3, 2, 1);
        trunk_.template add<nn::BatchNorm2d<T>>(out);
        trunk_.template add<nn::ReLU<T>>();
        width = out;
      } else if (tok[0] == 'R') {
        if (spec_.scaled(std::stoll(tok.substr(1))) != width) {
          throw ContractError("residual block width must match the incoming width");
        }
        trunk_.template add<nn::ResidualBlock<T>>(width);
      } else if (tok[0] == 'u') {
        const std::int64_t out = spec_.scaled(std::stoll(tok.substr(1)));
        trunk_.template add<nn::ConvTranspose2d<T>>(width, out, 3, 2, 1, 1);
        trunk_.template add<nn::BatchNorm2d<T>>(out);
        trunk_.template add<nn::ReLU<T>>();
        width = out;
      } else {
        throw ContractError("unknown generator layer token: " + tok);
      }
    }
  }

  const GeneratorSpec& spec() const { return spec_; }

  nn::Sequential<T>& trunk() { return trunk_; }

  MaskPair<T> forward(const Tensor<T>& x, bool train) {
    if (x.rank() != 4 || x.channels() != spec_.in_channels) {
      throw DimensionError("generator input: channel axis is " +
                           std::to_string(x.rank() == 4 ? x.channels() : -1) + ", expected " +
                           std::to_string(spec_.in_channels));
    }
    if (x.height() < 16 || x.width() < 16) {
      throw DimensionError("generator input: spatial size must be at least 16");
    }
    if (x.height() % 4 != 0) {
      throw DimensionError("generator input: height " + std::to_string(x.height()) + " is not a multiple of 4");
    }
    if (x.width() % 4 != 0) {
      throw DimensionError("generator input: width " + std::to_string(x.width()) + " is not a multiple of 4");
    }

    Tensor<T> raw = trunk_.forward(x, train);
    MaskPair<T> out;
    if (!spec_.attention_head) {
      out.content = content_act_.forward(raw, train);
      return out;
    }
    auto [content_raw, mask_raw] = split_channels(raw, 3);
    out.content = content_act_.forward(content_raw, train);
    out.attention = mask_act_.forward(mask_raw, train);
    if (force_mask_zero_) out.attention.zero();
    return out;
  }

  // Propagates gradients for one forward pass (the most recent unconsumed
  // one) and returns the gradient with respect to the generator input.
  Tensor<T> backward(const Tensor<T>& d_content, const Tensor<T>& d_attention) {
    Tensor<T> d_raw;
    if (!spec_.attention_head) {
      d_raw = content_act_.backward(d_content);
    } else {
      Tensor<T> d_mask = d_attention;
      if (force_mask_zero_) d_mask.zero();
      Tensor<T> d_mask_raw = mask_act_.backward(d_mask);
      Tensor<T> d_content_raw = content_act_.backward(d_content);
      d_raw = concat_channels(d_content_raw, d_mask_raw);
    }
    return trunk_.backward(d_raw);
  }

  void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& params,
               std::vector<nn::BufferRef<T>>& buffers) {
    trunk_.collect(prefix, params, buffers);
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

  void init_params(Rng& rng) { trunk_.init_params(rng); }

  void clear_cache() {
    trunk_.clear_cache();
    content_act_.clear_cache();
    mask_act_.clear_cache();
  }

  // Diagnostic hook: pins the attention mask to 0 so the fused output must
  // reproduce the input exactly. Gradients into the mask are dropped.
  void set_force_mask_zero(bool on) { force_mask_zero_ = on; }

 private:
  GeneratorSpec spec_;
  nn::Sequential<T> trunk_;
  nn::Tanh<T> content_act_;
  nn::Sigmoid<T> mask_act_;
  bool force_mask_zero_ = false;
};

// Pointwise blend of translated content into the source image under the
// attention mask: out = content·mask + x·(1−mask), the single-channel mask
// broadcast across the three image channels.
template <typename T>
Tensor<T> fuse(const Tensor<T>& x, const Tensor<T>& mask, const Tensor<T>& content) {
  if (!x.same_dims(content)) {
    throw DimensionError("fuse: image dims " + Tensor<T>::dims_to_string(x.dims()) + " vs content " +
                         Tensor<T>::dims_to_string(content.dims()));
  }
  if (mask.batch() != x.batch() || mask.channels() != 1 || mask.height() != x.height() ||
      mask.width() != x.width()) {
    throw DimensionError("fuse: mask dims " + Tensor<T>::dims_to_string(mask.dims()) +
                         " do not align with image " + Tensor<T>::dims_to_string(x.dims()));
  }
  Tensor<T> out(x.dims());
  const std::int64_t plane = x.height() * x.width();
  for (std::int64_t n = 0; n < x.batch(); ++n) {
    const T* m = mask.data() + n * plane;
    for (std::int64_t c = 0; c < 3; ++c) {
      const T* xi = x.data() + (n * 3 + c) * plane;
      const T* r = content.data() + (n * 3 + c) * plane;
      T* o = out.data() + (n * 3 + c) * plane;
      for (std::int64_t p = 0; p < plane; ++p) o[p] = r[p] * m[p] + xi[p] * (T(1) - m[p]);
    }
  }
  return out;
}

template <typename T>
struct FuseGrads {
  Tensor<T> d_x;
  Tensor<T> d_mask;
  Tensor<T> d_content;
};

template <typename T>
FuseGrads<T> fuse_backward(const Tensor<T>& d_out, const Tensor<T>& x, const Tensor<T>& mask,
                           const Tensor<T>& content) {
  FuseGrads<T> g;
  g.d_x = Tensor<T>(x.dims());
  g.d_content = Tensor<T>(content.dims());
  g.d_mask = Tensor<T>(mask.dims());
  const std::int64_t plane = x.height() * x.width();
  for (std::int64_t n = 0; n < x.batch(); ++n) {
    const T* m = mask.data() + n * plane;
    T* dm = g.d_mask.data() + n * plane;
    for (std::int64_t c = 0; c < 3; ++c) {
      const std::int64_t off = (n * 3 + c) * plane;
      const T* go = d_out.data() + off;
      const T* xi = x.data() + off;
      const T* r = content.data() + off;
      T* dx = g.d_x.data() + off;
      T* dr = g.d_content.data() + off;
      for (std::int64_t p = 0; p < plane; ++p) {
        dx[p] = go[p] * (T(1) - m[p]);
        dr[p] = go[p] * m[p];
        dm[p] += go[p] * (r[p] - xi[p]);
      }
    }
  }
  return g;
}

}  // namespace agit
