#pragma once

#include <cstdint>
#include <string>

#include "agit/errors.hpp"
#include "agit/tensor.hpp"

namespace agit {

enum class Domain { X, Y };

inline const char* domain_name(Domain d) { return d == Domain::X ? "X" : "Y"; }

// Range slack absorbing accumulated rounding on [-1,1] and [0,1] data.
inline constexpr double kRangeEps = 1e-5;

// A batch of images in (N, 3, H, W) layout, values in [-1, 1], tagged with
// the domain it was sampled from.
struct ImageBatch {
  Tensor<float> data;
  Domain domain = Domain::X;
};

template <typename T>
void validate_image_batch(const Tensor<T>& data, const char* what = "image batch") {
  if (data.rank() != 4) throw DimensionError(std::string(what) + ": expected rank 4");
  if (data.channels() != 3) {
    throw DimensionError(std::string(what) + ": channel axis is " + std::to_string(data.channels()) +
                         ", expected 3");
  }
  if (data.height() % 4 != 0) {
    throw DimensionError(std::string(what) + ": height " + std::to_string(data.height()) +
                         " is not a multiple of 4");
  }
  if (data.width() % 4 != 0) {
    throw DimensionError(std::string(what) + ": width " + std::to_string(data.width()) + " is not a multiple of 4");
  }
  if (!data.all_finite()) throw NumericError(std::string(what) + ": non-finite entries");
  const auto [lo, hi] = data.min_max();
  if (lo < T(-1) - T(kRangeEps) || hi > T(1) + T(kRangeEps)) {
    throw ContractError(std::string(what) + ": values outside [-1, 1]");
  }
}

template <typename T>
void validate_attention_mask(const Tensor<T>& mask, const char* what = "attention mask") {
  if (mask.rank() != 4 || mask.channels() != 1) {
    throw DimensionError(std::string(what) + ": expected (N, 1, H, W)");
  }
  if (!mask.all_finite()) throw NumericError(std::string(what) + ": non-finite entries");
  const auto [lo, hi] = mask.min_max();
  if (lo < T(0) - T(kRangeEps) || hi > T(1) + T(kRangeEps)) {
    throw ContractError(std::string(what) + ": values outside [0, 1]");
  }
}

template <typename T>
void validate_content_mask(const Tensor<T>& content, const char* what = "content mask") {
  if (content.rank() != 4 || content.channels() != 3) {
    throw DimensionError(std::string(what) + ": expected (N, 3, H, W)");
  }
  if (!content.all_finite()) throw NumericError(std::string(what) + ": non-finite entries");
  const auto [lo, hi] = content.min_max();
  if (lo < T(-1) - T(kRangeEps) || hi > T(1) + T(kRangeEps)) {
    throw ContractError(std::string(what) + ": values outside [-1, 1]");
  }
}

// Per-step loss components. The gan/agan entries are the generator-side
// adversarial values; total combines everything under the curriculum weights.
struct LossReport {
  double gan_xy = 0.0;
  double gan_yx = 0.0;
  double agan_xy = 0.0;
  double agan_yx = 0.0;
  double cycle = 0.0;
  double pixel = 0.0;
  double tv_x = 0.0;
  double tv_y = 0.0;
  double total = 0.0;
};

}  // namespace agit
