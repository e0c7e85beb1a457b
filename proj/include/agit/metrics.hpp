#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "agit/image_io.hpp"

namespace agit {

// PSNR reported when the error is exactly zero.
inline constexpr double kPsnrSaturated = std::numeric_limits<double>::infinity();

inline bool psnr_saturated(double psnr) { return psnr == kPsnrSaturated; }

// Mean over all pixels and channels of the squared 8-bit difference.
double mse(const Image8& a, const Image8& b);

double psnr_from_mse(double mse_value);
double psnr(const Image8& a, const Image8& b);

struct ImageMetrics {
  std::string name;
  double mse = 0.0;
  double psnr = 0.0;
};

// Aggregates carry both averaging orders because they differ on any
// non-uniform error distribution; consumers pick one explicitly.
struct MetricReport {
  std::string mode;  // what the generated images were compared against
  std::int64_t n_images = 0;
  double mean_mse = 0.0;
  double psnr_of_mean_mse = 0.0;  // 10 log10(255^2 / mean_mse)
  double mean_psnr = 0.0;         // average of per-image PSNR values
  std::vector<ImageMetrics> per_image;
};

MetricReport aggregate_metrics(std::vector<ImageMetrics> per_image, const std::string& mode);

// One JSON object per line: {"name": ..., "mse": ..., "psnr": ...};
// a saturated PSNR is written as null.
void write_metric_records(const std::filesystem::path& path, const MetricReport& report);

std::string format_metric_table(const MetricReport& report);

}  // namespace agit
