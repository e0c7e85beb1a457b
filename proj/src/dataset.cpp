#include "agit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "agit/errors.hpp"
#include "agit/image_io.hpp"
#include "agit/rng.hpp"

namespace agit {

namespace {

std::string indexed_name(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%05lld", static_cast<long long>(index));
  return buf;
}

bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

struct SceneGeometry {
  double cx, cy, r;     // disc
  double feature_x0, feature_x1, feature_y0, feature_y1;  // changed-region box
};

// Paints one scene: textured background, gray disc, and either a dark flat
// bar (domain A) or a bright upward-curved arc (domain B) on the lower disc.
SceneGeometry paint_scene(Image8& img, Domain domain, Rng& rng) {
  const int s = img.width;
  constexpr int kGrid = 8;

  // Smooth random texture: a coarse control grid interpolated bilinearly,
  // plus fine per-pixel noise.
  double grid[3][kGrid + 1][kGrid + 1];
  for (int c = 0; c < 3; ++c) {
    for (int gy = 0; gy <= kGrid; ++gy) {
      for (int gx = 0; gx <= kGrid; ++gx) grid[c][gy][gx] = rng.uniform(60.0, 180.0);
    }
  }

  SceneGeometry geo{};
  geo.cx = s * rng.uniform(0.38, 0.62);
  geo.cy = s * rng.uniform(0.38, 0.62);
  geo.r = s * rng.uniform(0.20, 0.30);

  const double disc_base = rng.uniform(125.0, 170.0);
  double disc_color[3];
  for (double& c : disc_color) c = disc_base + rng.uniform(-12.0, 12.0);

  double feature_color[3];
  if (domain == Domain::X) {
    feature_color[0] = 42.0 + rng.uniform(-6.0, 6.0);
    feature_color[1] = 32.0 + rng.uniform(-6.0, 6.0);
    feature_color[2] = 32.0 + rng.uniform(-6.0, 6.0);
  } else {
    feature_color[0] = 232.0 + rng.uniform(-6.0, 6.0);
    feature_color[1] = 222.0 + rng.uniform(-6.0, 6.0);
    feature_color[2] = 120.0 + rng.uniform(-6.0, 6.0);
  }

  // Bar geometry (domain A): flat dark slab below the disc center.
  const double mouth_y = geo.cy + 0.38 * geo.r;
  const double bar_hw = 0.50 * geo.r;
  const double bar_hh = std::max(1.0, 0.09 * geo.r);

  // Arc geometry (domain B): lower segment of a ring, so it curves upward.
  const double arc_cy = geo.cy + 0.02 * geo.r;
  const double arc_r = 0.55 * geo.r;
  const double arc_t = std::max(1.0, 0.09 * geo.r);
  const double arc_cut = arc_cy + 0.55 * arc_r;

  if (domain == Domain::X) {
    geo.feature_x0 = geo.cx - bar_hw;
    geo.feature_x1 = geo.cx + bar_hw;
    geo.feature_y0 = mouth_y - bar_hh;
    geo.feature_y1 = mouth_y + bar_hh;
  } else {
    const double half_span = std::sqrt(std::max(0.0, arc_r * arc_r - 0.55 * arc_r * 0.55 * arc_r));
    geo.feature_x0 = geo.cx - half_span - arc_t;
    geo.feature_x1 = geo.cx + half_span + arc_t;
    geo.feature_y0 = arc_cut - arc_t;
    geo.feature_y1 = arc_cy + arc_r + arc_t;
  }

  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double u = static_cast<double>(x) * kGrid / (s - 1);
      const double v = static_cast<double>(y) * kGrid / (s - 1);
      const int gx = std::min(static_cast<int>(u), kGrid - 1);
      const int gy = std::min(static_cast<int>(v), kGrid - 1);
      const double fu = u - gx;
      const double fv = v - gy;

      const double dx = x - geo.cx;
      const double dy = y - geo.cy;
      const bool in_disc = dx * dx + dy * dy <= geo.r * geo.r;

      bool in_feature = false;
      if (domain == Domain::X) {
        in_feature = std::abs(x - geo.cx) <= bar_hw && std::abs(y - mouth_y) <= bar_hh;
      } else {
        const double ax = x - geo.cx;
        const double ay = y - arc_cy;
        const double dist = std::sqrt(ax * ax + ay * ay);
        in_feature = std::abs(dist - arc_r) <= arc_t && y >= arc_cut;
      }

      for (int c = 0; c < 3; ++c) {
        double value;
        if (in_feature) {
          value = feature_color[c];
        } else if (in_disc) {
          value = disc_color[c];
        } else {
          const double top = grid[c][gy][gx] * (1 - fu) + grid[c][gy][gx + 1] * fu;
          const double bot = grid[c][gy + 1][gx] * (1 - fu) + grid[c][gy + 1][gx + 1] * fu;
          value = top * (1 - fv) + bot * fv + rng.uniform(-8.0, 8.0);
        }
        img.at(y, x, c) = to_byte(value);
      }
    }
  }
  return geo;
}

Image8 feature_mask(const SceneGeometry& geo, int s) {
  Image8 mask(s, s, 1);
  const int x0 = std::clamp(static_cast<int>(std::floor(geo.feature_x0)), 0, s - 1);
  const int x1 = std::clamp(static_cast<int>(std::ceil(geo.feature_x1)), 0, s - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(geo.feature_y0)), 0, s - 1);
  const int y1 = std::clamp(static_cast<int>(std::ceil(geo.feature_y1)), 0, s - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) mask.at(y, x, 0) = 255;
  }
  return mask;
}

}  // namespace

const char* split_name(Split split) { return split == Split::TRAIN ? "train" : "test"; }

std::string domain_dir(Split split, Domain domain) {
  return std::string(split_name(split)) + (domain == Domain::X ? "A" : "B");
}

UnpairedDataset load_dataset(const std::filesystem::path& root, Split split, Domain domain, const TrainConfig& cfg) {
  const auto dir = root / domain_dir(split, domain);
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("missing dataset directory (expected layout root/{trainA, trainB, testA, testB})", dir.string());
  }

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("empty domain: no PNG/JPEG images", dir.string());

  const int s = cfg.image_size;
  UnpairedDataset ds;
  ds.root = root;
  ds.split = split;
  ds.domain = domain;
  ds.images = Tensor<float>({static_cast<std::int64_t>(files.size()), 3, s, s});
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto img = resize_bilinear(read_image(files[i]), s, s);
    set_sample(ds.images, static_cast<std::int64_t>(i), image_to_tensor(img));
    ds.names.push_back(files[i].stem().string());
  }
  return ds;
}

Tensor<float> load_sidecar_mask(const std::filesystem::path& root, Split split, Domain domain, const std::string& name,
                                int image_size) {
  const auto path = root / "masks" / domain_dir(split, domain) / (name + ".png");
  auto img = read_image(path, true);
  if (img.width != image_size || img.height != image_size) img = resize_bilinear(img, image_size, image_size);
  return image_to_mask(img);
}

void synth_domains(const std::filesystem::path& out_root, int n_per_domain, int image_size, std::uint64_t seed) {
  if (n_per_domain < 1) throw ContractError("synthetic generation needs n_per_domain >= 1");
  if (image_size < 16) throw ContractError("synthetic generation needs image_size >= 16");

  for (Split split : {Split::TRAIN, Split::TEST}) {
    for (Domain domain : {Domain::X, Domain::Y}) {
      const auto dir_name = domain_dir(split, domain);
      const auto img_dir = out_root / dir_name;
      const auto mask_dir = out_root / "masks" / dir_name;
      std::error_code ec;
      std::filesystem::create_directories(img_dir, ec);
      std::filesystem::create_directories(mask_dir, ec);
      if (!std::filesystem::is_directory(img_dir) || !std::filesystem::is_directory(mask_dir)) {
        throw IoError("cannot create dataset directory", (ec ? img_dir : mask_dir).string());
      }

      for (int i = 0; i < n_per_domain; ++i) {
        Rng rng(stream_seed(seed, dir_name.c_str(), static_cast<std::uint64_t>(i)));
        Image8 img(image_size, image_size, 3);
        const auto geo = paint_scene(img, domain, rng);
        const auto name = indexed_name(i) + ".png";
        write_image(img_dir / name, img);
        write_image(mask_dir / name, feature_mask(geo, image_size));
      }
    }
  }
}

}  // namespace agit
