#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace agit {

enum class GanLossForm { NEG_LOG_LIKELIHOOD, LEAST_SQUARES };

const char* gan_loss_form_name(GanLossForm form);
GanLossForm gan_loss_form_from_name(const std::string& name);

// Full training configuration. Defaults are the published operating point;
// image_size and channel_scale default to the desk-scale profile.
struct TrainConfig {
  double lambda_gan = 0.5;
  double lambda_cycle = 10.0;
  double lambda_pixel = 1.0;
  double lambda_tv = 1e-6;

  double r_warm = 0.01;
  int warm_epochs = 10;
  double r_main = 0.5;

  int buffer_size = 50;
  int batch_size = 1;
  int epochs = 200;
  int decay_start_epoch = 100;
  double lr = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;

  int image_size = 64;
  double channel_scale = 0.5;
  std::uint64_t seed = 0;
  bool flip_augment = true;

  GanLossForm gan_loss_form = GanLossForm::LEAST_SQUARES;
  bool first_block_norm = false;
  double pool_swap_prob = 0.5;
  bool use_attention_discriminators = true;
  bool use_attention_generator = true;

  bool operator==(const TrainConfig&) const = default;
};

// Throws ContractError naming the offending field when an invariant fails.
void validate(const TrainConfig& cfg);

// Applies one `key = value` assignment; unknown keys and malformed values
// throw ContractError. Shared by the file parser and CLI flag overrides.
void apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value);

// Every assignable key, in serialization order.
const std::vector<std::string>& config_keys();

// Layered configuration: defaults, then the optional file, then explicit
// overrides (last occurrence of a key wins). Validates the result.
TrainConfig resolve_config(const std::string& config_path,
                           const std::vector<std::pair<std::string, std::string>>& overrides);

// Parses the flat key-value format (one assignment per line, # comments).
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::string& path);

// Emits the full configuration; doubles are printed with enough digits to
// round-trip losslessly.
std::string serialize_config(const TrainConfig& cfg);
void save_config(const std::string& path, const TrainConfig& cfg);

}  // namespace agit
