#include "agit/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "agit/errors.hpp"

namespace agit {

double mse(const Image8& a, const Image8& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw DimensionError("images to compare must share width, height and channels");
  }
  if (a.pixels.empty()) throw ContractError("cannot compare empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.pixels.size());
}

double psnr_from_mse(double mse_value) {
  if (mse_value < 0.0) throw ContractError("squared error cannot be negative");
  if (mse_value == 0.0) return kPsnrSaturated;
  return 10.0 * std::log10(255.0 * 255.0 / mse_value);
}

double psnr(const Image8& a, const Image8& b) { return psnr_from_mse(mse(a, b)); }

MetricReport aggregate_metrics(std::vector<ImageMetrics> per_image, const std::string& mode) {
  if (per_image.empty()) throw ContractError("metric aggregation needs at least one image");
  MetricReport report;
  report.mode = mode;
  report.n_images = static_cast<std::int64_t>(per_image.size());
  double mse_sum = 0.0;
  double psnr_sum = 0.0;
  for (const auto& m : per_image) {
    mse_sum += m.mse;
    psnr_sum += m.psnr;
  }
  report.mean_mse = mse_sum / static_cast<double>(per_image.size());
  report.psnr_of_mean_mse = psnr_from_mse(report.mean_mse);
  report.mean_psnr = psnr_sum / static_cast<double>(per_image.size());
  report.per_image = std::move(per_image);
  return report;
}

void write_metric_records(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open records file for writing", path.string());
  for (const auto& m : report.per_image) {
    nlohmann::json rec;
    rec["name"] = m.name;
    rec["mse"] = m.mse;
    if (psnr_saturated(m.psnr)) {
      rec["psnr"] = nullptr;
    } else {
      rec["psnr"] = m.psnr;
    }
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed while writing records file", path.string());
}

std::string format_metric_table(const MetricReport& report) {
  std::ostringstream out;
  char line[128];
  out << "name                      mse         psnr (dB)\n";
  for (const auto& m : report.per_image) {
    if (psnr_saturated(m.psnr)) {
      std::snprintf(line, sizeof(line), "%-24s %10.4f   saturated\n", m.name.c_str(), m.mse);
    } else {
      std::snprintf(line, sizeof(line), "%-24s %10.4f   %9.4f\n", m.name.c_str(), m.mse, m.psnr);
    }
    out << line;
  }
  std::snprintf(line, sizeof(line), "images: %lld   compared against: %s\n", static_cast<long long>(report.n_images),
                report.mode.c_str());
  out << line;
  std::snprintf(line, sizeof(line), "mean mse: %.4f   psnr of mean mse: %.4f   mean psnr: %.4f\n", report.mean_mse,
                report.psnr_of_mean_mse, report.mean_psnr);
  out << line;
  return out.str();
}

}  // namespace agit
