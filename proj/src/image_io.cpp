#include "agit/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "agit/errors.hpp"

namespace agit {

namespace {

cv::Mat to_mat(const Image8& img) {
  const int type = img.channels == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat m(img.height, img.width, type);
  for (int y = 0; y < img.height; ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 1) {
        row[x] = img.at(y, x, 0);
      } else {
        // OpenCV stores BGR.
        row[3 * x + 0] = img.at(y, x, 2);
        row[3 * x + 1] = img.at(y, x, 1);
        row[3 * x + 2] = img.at(y, x, 0);
      }
    }
  }
  return m;
}

Image8 from_mat(const cv::Mat& m) {
  Image8 img(m.cols, m.rows, m.channels());
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      if (m.channels() == 1) {
        img.at(y, x, 0) = row[x];
      } else {
        img.at(y, x, 0) = row[3 * x + 2];
        img.at(y, x, 1) = row[3 * x + 1];
        img.at(y, x, 2) = row[3 * x + 0];
      }
    }
  }
  return img;
}

}  // namespace

Image8 read_image(const std::filesystem::path& path, bool grayscale) {
  cv::Mat m = cv::imread(path.string(), grayscale ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
  if (m.empty()) throw IoError("cannot read image", path.string());
  return from_mat(m);
}

void write_image(const std::filesystem::path& path, const Image8& img) {
  if (img.width <= 0 || img.height <= 0 || (img.channels != 1 && img.channels != 3)) {
    throw ContractError("image to write must be 1- or 3-channel with positive size");
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), to_mat(img));
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw IoError("cannot write image", path.string());
}

Image8 resize_bilinear(const Image8& img, int width, int height) {
  if (width <= 0 || height <= 0) throw ContractError("resize target must be positive");
  if (width == img.width && height == img.height) return img;
  cv::Mat dst;
  cv::resize(to_mat(img), dst, cv::Size(width, height), 0.0, 0.0, cv::INTER_LINEAR);
  return from_mat(dst);
}

Tensor<float> image_to_tensor(const Image8& img) {
  Tensor<float> t({1, img.channels, img.height, img.width});
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        t.at(0, c, y, x) = (2.0f * static_cast<float>(img.at(y, x, c))) / 255.0f - 1.0f;
      }
    }
  }
  return t;
}

std::uint8_t quantize_signed(float v) {
  const long q = std::lround((static_cast<double>(v) + 1.0) * 127.5);
  return static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
}

std::uint8_t quantize_unit(float v) {
  const long q = std::lround(static_cast<double>(v) * 255.0);
  return static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
}

Image8 tensor_to_image(const Tensor<float>& batch, std::int64_t sample) {
  if (batch.rank() != 4 || batch.channels() != 3) throw DimensionError("image tensor must be (N, 3, H, W)");
  const auto h = static_cast<int>(batch.height());
  const auto w = static_cast<int>(batch.width());
  Image8 img(w, h, 3);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) img.at(y, x, c) = quantize_signed(batch.at(sample, c, y, x));
    }
  }
  return img;
}

Image8 mask_to_image(const Tensor<float>& mask, std::int64_t sample) {
  if (mask.rank() != 4 || mask.channels() != 1) throw DimensionError("mask tensor must be (N, 1, H, W)");
  const auto h = static_cast<int>(mask.height());
  const auto w = static_cast<int>(mask.width());
  Image8 img(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(y, x, 0) = quantize_unit(mask.at(sample, 0, y, x));
  }
  return img;
}

Tensor<float> image_to_mask(const Image8& img) {
  if (img.channels != 1) throw DimensionError("mask image must be single channel");
  Tensor<float> t({1, 1, img.height, img.width});
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) t.at(0, 0, y, x) = static_cast<float>(img.at(y, x, 0)) / 255.0f;
  }
  return t;
}

}  // namespace agit
