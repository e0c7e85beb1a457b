#pragma once

#include <string>
#include <vector>

#include "agit/config.hpp"

namespace agit {

// Which optional ingredients stay enabled. All true reproduces the full model.
struct AblationFlags {
  bool use_attention_discriminators = true;
  bool use_attention_generator = true;
  bool use_pixel_loss = true;
  bool use_attention_loss = true;

  bool operator==(const AblationFlags&) const = default;
};

// Rewrites cfg so disabled ingredients vanish from the model and objective.
// Dropping the attention generator also drops the attended critics, which
// cannot see a mask that no longer exists; asking for them anyway is an error.
TrainConfig apply_ablation(TrainConfig cfg, const AblationFlags& flags);

// Named presets for the ablate command. "full" keeps everything; the
// suffixes drop attended critics (ad), the attention head (ag), the pixel
// loss (pl), and the attention smoothness loss (al).
AblationFlags ablation_variant(const std::string& name);
const std::vector<std::string>& ablation_variant_names();

}  // namespace agit
