#include "agit/ablation.hpp"

#include "agit/errors.hpp"

namespace agit {

TrainConfig apply_ablation(TrainConfig cfg, const AblationFlags& flags) {
  if (flags.use_attention_discriminators && !flags.use_attention_generator) {
    throw ContractError("inconsistent ablation: attended critics need the attention generator");
  }
  cfg.use_attention_discriminators = flags.use_attention_discriminators;
  cfg.use_attention_generator = flags.use_attention_generator;
  if (!flags.use_pixel_loss) cfg.lambda_pixel = 0.0;
  if (!flags.use_attention_loss) cfg.lambda_tv = 0.0;
  validate(cfg);
  return cfg;
}

AblationFlags ablation_variant(const std::string& name) {
  AblationFlags flags;
  if (name == "full") return flags;
  flags.use_attention_discriminators = false;
  if (name == "-ad") return flags;
  if (name == "-ad-ag") {
    flags.use_attention_generator = false;
    return flags;
  }
  if (name == "-ad-pl") {
    flags.use_pixel_loss = false;
    return flags;
  }
  if (name == "-ad-al") {
    flags.use_attention_loss = false;
    return flags;
  }
  if (name == "-ad-pl-al") {
    flags.use_pixel_loss = false;
    flags.use_attention_loss = false;
    return flags;
  }
  throw ContractError("unknown ablation variant: '" + name + "'");
}

const std::vector<std::string>& ablation_variant_names() {
  static const std::vector<std::string> names = {"full", "-ad", "-ad-ag", "-ad-pl", "-ad-al", "-ad-pl-al"};
  return names;
}

}  // namespace agit
