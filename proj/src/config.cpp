#include "agit/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "agit/errors.hpp"

namespace agit {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ContractError("configuration key '" + key + "': not a real number: '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ContractError("configuration key '" + key + "': not an integer: '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ContractError("configuration key '" + key + "': not an unsigned integer: '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ContractError("configuration key '" + key + "': not a boolean: '" + value + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* gan_loss_form_name(GanLossForm form) {
  return form == GanLossForm::LEAST_SQUARES ? "least_squares" : "negative_log_likelihood";
}

GanLossForm gan_loss_form_from_name(const std::string& name) {
  if (name == "least_squares") return GanLossForm::LEAST_SQUARES;
  if (name == "negative_log_likelihood") return GanLossForm::NEG_LOG_LIKELIHOOD;
  throw ContractError("unknown adversarial loss form: '" + name + "'");
}

void validate(const TrainConfig& cfg) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ContractError(std::string("invalid configuration: ") + msg);
  };
  require(cfg.lambda_gan >= 0.0, "lambda_gan must be non-negative");
  require(cfg.lambda_cycle >= 0.0, "lambda_cycle must be non-negative");
  require(cfg.lambda_pixel >= 0.0, "lambda_pixel must be non-negative");
  require(cfg.lambda_tv >= 0.0, "lambda_tv must be non-negative");
  require(cfg.r_warm >= 0.0 && cfg.r_warm <= 1.0, "r_warm must lie in [0, 1]");
  require(cfg.r_main >= 0.0 && cfg.r_main <= 1.0, "r_main must lie in [0, 1]");
  require(cfg.warm_epochs >= 0, "warm_epochs must be non-negative");
  require(cfg.epochs >= 0, "epochs must be non-negative");
  require(cfg.warm_epochs <= cfg.epochs, "warm_epochs must not exceed epochs");
  if (cfg.epochs > 0) {
    require(cfg.decay_start_epoch >= 0 && cfg.decay_start_epoch < cfg.epochs,
            "decay_start_epoch must lie in [0, epochs)");
  }
  require(cfg.batch_size >= 1, "batch_size must be at least 1");
  require(cfg.lr >= 0.0, "lr must be non-negative");
  require(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  require(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  require(cfg.image_size >= 16, "image_size must be at least 16");
  require(cfg.image_size % 4 == 0, "image_size must be a multiple of 4");
  require(cfg.channel_scale > 0.0 && cfg.channel_scale <= 1.0, "channel_scale must lie in (0, 1]");
  require(cfg.pool_swap_prob >= 0.0 && cfg.pool_swap_prob <= 1.0, "pool_swap_prob must lie in [0, 1]");
  require(!(cfg.use_attention_discriminators && !cfg.use_attention_generator),
          "attention discriminators require the attention generator");
}

void apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "lambda_gan") cfg.lambda_gan = parse_double(key, value);
  else if (key == "lambda_cycle") cfg.lambda_cycle = parse_double(key, value);
  else if (key == "lambda_pixel") cfg.lambda_pixel = parse_double(key, value);
  else if (key == "lambda_tv") cfg.lambda_tv = parse_double(key, value);
  else if (key == "r_warm") cfg.r_warm = parse_double(key, value);
  else if (key == "warm_epochs") cfg.warm_epochs = parse_int(key, value);
  else if (key == "r_main") cfg.r_main = parse_double(key, value);
  else if (key == "buffer_size") cfg.buffer_size = parse_int(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
  else if (key == "epochs") cfg.epochs = parse_int(key, value);
  else if (key == "decay_start_epoch") cfg.decay_start_epoch = parse_int(key, value);
  else if (key == "lr") cfg.lr = parse_double(key, value);
  else if (key == "adam_beta1") cfg.adam_beta1 = parse_double(key, value);
  else if (key == "adam_beta2") cfg.adam_beta2 = parse_double(key, value);
  else if (key == "image_size") cfg.image_size = parse_int(key, value);
  else if (key == "channel_scale") cfg.channel_scale = parse_double(key, value);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "flip_augment") cfg.flip_augment = parse_bool(key, value);
  else if (key == "gan_loss_form") cfg.gan_loss_form = gan_loss_form_from_name(value);
  else if (key == "first_block_norm") cfg.first_block_norm = parse_bool(key, value);
  else if (key == "pool_swap_prob") cfg.pool_swap_prob = parse_double(key, value);
  else if (key == "use_attention_discriminators") cfg.use_attention_discriminators = parse_bool(key, value);
  else if (key == "use_attention_generator") cfg.use_attention_generator = parse_bool(key, value);
  else throw ContractError("unknown configuration key: '" + key + "'");
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError("configuration line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                          line + "'");
    }
    apply_config_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "lambda_gan",     "lambda_cycle",    "lambda_pixel",
      "lambda_tv",      "r_warm",          "warm_epochs",
      "r_main",         "buffer_size",     "batch_size",
      "epochs",         "decay_start_epoch", "lr",
      "adam_beta1",     "adam_beta2",      "image_size",
      "channel_scale",  "seed",            "flip_augment",
      "gan_loss_form",  "first_block_norm", "pool_swap_prob",
      "use_attention_discriminators", "use_attention_generator",
  };
  return keys;
}

TrainConfig resolve_config(const std::string& config_path,
                           const std::vector<std::pair<std::string, std::string>>& overrides) {
  TrainConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  for (const auto& [key, value] : overrides) apply_config_key(cfg, key, value);
  validate(cfg);
  return cfg;
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "# objective weights\n";
  out << "lambda_gan = " << format_double(cfg.lambda_gan) << "\n";
  out << "lambda_cycle = " << format_double(cfg.lambda_cycle) << "\n";
  out << "lambda_pixel = " << format_double(cfg.lambda_pixel) << "\n";
  out << "lambda_tv = " << format_double(cfg.lambda_tv) << "\n";
  out << "\n# curriculum\n";
  out << "r_warm = " << format_double(cfg.r_warm) << "\n";
  out << "warm_epochs = " << cfg.warm_epochs << "\n";
  out << "r_main = " << format_double(cfg.r_main) << "\n";
  out << "\n# optimization\n";
  out << "buffer_size = " << cfg.buffer_size << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "epochs = " << cfg.epochs << "\n";
  out << "decay_start_epoch = " << cfg.decay_start_epoch << "\n";
  out << "lr = " << format_double(cfg.lr) << "\n";
  out << "adam_beta1 = " << format_double(cfg.adam_beta1) << "\n";
  out << "adam_beta2 = " << format_double(cfg.adam_beta2) << "\n";
  out << "\n# model and data\n";
  out << "image_size = " << cfg.image_size << "\n";
  out << "channel_scale = " << format_double(cfg.channel_scale) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "flip_augment = " << (cfg.flip_augment ? "true" : "false") << "\n";
  out << "gan_loss_form = " << gan_loss_form_name(cfg.gan_loss_form) << "\n";
  out << "first_block_norm = " << (cfg.first_block_norm ? "true" : "false") << "\n";
  out << "pool_swap_prob = " << format_double(cfg.pool_swap_prob) << "\n";
  out << "use_attention_discriminators = " << (cfg.use_attention_discriminators ? "true" : "false") << "\n";
  out << "use_attention_generator = " << (cfg.use_attention_generator ? "true" : "false") << "\n";
  return out.str();
}

void save_config(const std::string& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write configuration file: " + path);
  out << serialize_config(cfg);
  if (!out) throw IoError("failed writing configuration file: " + path);
}

}  // namespace agit
