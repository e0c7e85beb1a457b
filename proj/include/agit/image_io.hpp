#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "agit/tensor.hpp"

namespace agit {

// 8-bit interleaved image, RGB for 3 channels, row-major rows top to bottom.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(int w, int h, int c) : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, 0) {}

  std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

// Decode from disk (PNG/JPEG); color files come back as 3-channel RGB,
// grayscale files as 1 channel. Missing or undecodable files raise IoError
// naming the path.
Image8 read_image(const std::filesystem::path& path, bool grayscale = false);

// Encode by extension. Failures raise IoError naming the path.
void write_image(const std::filesystem::path& path, const Image8& img);

Image8 resize_bilinear(const Image8& img, int width, int height);

// 8-bit to normalized float, p -> 2p/255 - 1, laid out as a (1, C, H, W)
// sample so it can feed the networks directly.
Tensor<float> image_to_tensor(const Image8& img);

// Inverse map for one sample of a (N, 3, H, W) batch: round((v+1)*127.5)
// half away from zero, clamped to [0, 255].
Image8 tensor_to_image(const Tensor<float>& batch, std::int64_t sample);

// Attention mask sample (values in [0, 1]) rendered linearly to 8-bit gray.
Image8 mask_to_image(const Tensor<float>& mask, std::int64_t sample);

// Gray image back to a (1, 1, H, W) tensor in [0, 1].
Tensor<float> image_to_mask(const Image8& img);

std::uint8_t quantize_unit(float v);    // [0,1] -> byte
std::uint8_t quantize_signed(float v);  // [-1,1] -> byte

}  // namespace agit
