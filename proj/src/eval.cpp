#include "agit/eval.hpp"

#include <cstdio>

#include "agit/errors.hpp"
#include "agit/image_io.hpp"

namespace agit {

namespace {

Tensor<float> translate_sample(Generator<float>& gen, const Tensor<float>& sample) {
  auto heads = gen.forward(sample, false);
  if (heads.attention.empty()) return std::move(heads.content);
  return fuse(sample, heads.attention, heads.content);
}

// Stacks single-sample panels side by side into one 3-channel image.
Image8 tile_panels(const std::vector<Image8>& panels) {
  const int h = panels[0].height;
  const int w = panels[0].width;
  Image8 out(w * static_cast<int>(panels.size()), h, 3);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          const std::uint8_t v = panel.channels == 1 ? panel.at(y, x, 0) : panel.at(y, x, c);
          out.at(y, static_cast<int>(p) * w + x, c) = v;
        }
      }
    }
  }
  return out;
}

}  // namespace

Tensor<float> translate_batch(Generator<float>& gen, const Tensor<float>& batch) {
  Tensor<float> out(batch.dims());
  for (std::int64_t i = 0; i < batch.batch(); ++i) {
    set_sample(out, i, translate_sample(gen, slice_sample(batch, i)));
  }
  return out;
}

MetricReport evaluate_translation(Generator<float>& gen, const Tensor<float>& inputs,
                                  const std::vector<std::string>& names, const Tensor<float>* reference) {
  if (inputs.empty() || inputs.batch() == 0) throw ContractError("evaluation needs a nonempty test set");
  if (static_cast<std::int64_t>(names.size()) != inputs.batch()) {
    throw ContractError("evaluation needs one name per test image");
  }
  if (reference != nullptr && reference->batch() != inputs.batch()) {
    throw DimensionError("reference batch does not match the test batch");
  }

  std::vector<ImageMetrics> per_image;
  per_image.reserve(static_cast<std::size_t>(inputs.batch()));
  for (std::int64_t i = 0; i < inputs.batch(); ++i) {
    const auto input = slice_sample(inputs, i);
    const auto generated = translate_sample(gen, input);
    const auto gen_img = tensor_to_image(generated, 0);
    const auto ref_img = tensor_to_image(reference ? slice_sample(*reference, i) : input, 0);
    ImageMetrics m;
    m.name = names[static_cast<std::size_t>(i)];
    m.mse = mse(gen_img, ref_img);
    m.psnr = psnr_from_mse(m.mse);
    per_image.push_back(std::move(m));
  }
  return aggregate_metrics(std::move(per_image), reference ? "reference images" : "input images");
}

std::vector<std::filesystem::path> emit_grids(Generator<float>& forward_gen, Generator<float>* reverse_gen,
                                              const Tensor<float>& batch, const std::filesystem::path& out_dir) {
  if (batch.empty() || batch.batch() == 0) throw ContractError("grid emission needs a nonempty batch");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir)) throw IoError("cannot create grid directory", out_dir.string());

  std::vector<std::filesystem::path> paths;
  for (std::int64_t i = 0; i < batch.batch(); ++i) {
    const auto input = slice_sample(batch, i);
    auto heads = forward_gen.forward(input, false);
    const bool has_mask = !heads.attention.empty();
    const auto fused = has_mask ? fuse(input, heads.attention, heads.content) : heads.content;

    std::vector<Image8> panels;
    panels.push_back(tensor_to_image(input, 0));
    if (has_mask) {
      panels.push_back(mask_to_image(heads.attention, 0));
    } else {
      panels.push_back(Image8(static_cast<int>(batch.width()), static_cast<int>(batch.height()), 1));
    }
    panels.push_back(tensor_to_image(heads.content, 0));
    panels.push_back(tensor_to_image(fused, 0));
    if (reverse_gen != nullptr) panels.push_back(tensor_to_image(translate_sample(*reverse_gen, fused), 0));

    char name[32];
    std::snprintf(name, sizeof(name), "grid_%05lld.png", static_cast<long long>(i));
    const auto path = out_dir / name;
    write_image(path, tile_panels(panels));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace agit
