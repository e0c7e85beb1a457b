#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agit/config.hpp"
#include "agit/tensor.hpp"
#include "agit/types.hpp"

namespace agit {

enum class Split { TRAIN, TEST };

const char* split_name(Split split);

// Directory leaf for one side of the corpus: trainA, trainB, testA, testB.
std::string domain_dir(Split split, Domain domain);

// One side of an unpaired two-domain corpus, decoded, rescaled to a square
// target size and normalized to [-1, 1]. File order is sorted by name so a
// directory always loads the same way.
struct UnpairedDataset {
  std::filesystem::path root;
  Split split = Split::TRAIN;
  Domain domain = Domain::X;
  std::vector<std::string> names;  // file stems, aligned with batch order
  Tensor<float> images;            // (N, 3, S, S)

  std::int64_t size() const { return images.empty() ? 0 : images.batch(); }
};

UnpairedDataset load_dataset(const std::filesystem::path& root, Split split, Domain domain, const TrainConfig& cfg);

// Ground-truth changed-region mask generated alongside a synthetic image,
// as a (1, 1, S, S) tensor in [0, 1]. Rescaled when sizes differ.
Tensor<float> load_sidecar_mask(const std::filesystem::path& root, Split split, Domain domain, const std::string& name,
                                int image_size);

// Writes a synthetic unpaired two-domain task under out_root: both domains
// show a textured background and a randomly placed gray disc; domain A adds
// a flat dark bar across the lower disc, domain B an upward-curved bright
// arc in the same region. The bounding box of that bar or arc is saved as a
// sidecar mask under out_root/masks for localization diagnostics.
void synth_domains(const std::filesystem::path& out_root, int n_per_domain, int image_size, std::uint64_t seed);

}  // namespace agit
