#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "agit/ablation.hpp"
#include "agit/config.hpp"
#include "agit/dataset.hpp"
#include "agit/eval.hpp"
#include "agit/image_io.hpp"
#include "agit/metrics.hpp"
#include "agit/trainer.hpp"

namespace fs = std::filesystem;

namespace {

// Shared options for the training-style commands: a data root, a checkpoint
// directory, an optional config file, and one override flag per
// configuration key. Flags beat the file, the file beats the defaults, and
// --paper-scale slots between the file and the flags.
struct TrainOptions {
  std::string data;
  std::string out = "checkpoints";
  std::string config_path;
  bool paper_scale = false;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data, "dataset root with trainA/trainB/testA/testB")->required();
    cmd->add_option("--out", out, "checkpoint directory");
    cmd->add_option("--config", config_path, "configuration file applied over the defaults");
    cmd->add_flag("--paper-scale", paper_scale, "use the full-size operating point (image_size 256, channel_scale 1)");
    for (const auto& key : agit::config_keys()) {
      cmd->add_option("--" + key, values[key], "override configuration key " + key)
          ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
  }

  agit::TrainConfig resolve(const CLI::App* cmd) const {
    std::vector<std::pair<std::string, std::string>> overrides;
    if (paper_scale) {
      overrides.emplace_back("image_size", "256");
      overrides.emplace_back("channel_scale", "1.0");
    }
    for (const auto& key : agit::config_keys()) {
      if (cmd->count("--" + key) > 0) overrides.emplace_back(key, values.at(key));
    }
    return agit::resolve_config(config_path, overrides);
  }
};

void print_epoch(int epoch, const agit::TrainConfig& cfg, const agit::LossReport& mean) {
  std::printf("epoch %4d/%d  r %.3g  lr %.3g  total %.4f  cycle %.4f  pixel %.4f  gan %.4f  agan %.4f  tv %.4g\n",
              epoch + 1, cfg.epochs, agit::curriculum_r(cfg, epoch), agit::learning_rate(cfg, epoch), mean.total,
              mean.cycle, mean.pixel, mean.gan_xy + mean.gan_yx, mean.agan_xy + mean.agan_yx, mean.tv_x + mean.tv_y);
  std::fflush(stdout);
}

int run_training(const agit::TrainConfig& cfg, const TrainOptions& opt) {
  const auto a = agit::load_dataset(opt.data, agit::Split::TRAIN, agit::Domain::X, cfg);
  const auto b = agit::load_dataset(opt.data, agit::Split::TRAIN, agit::Domain::Y, cfg);
  std::printf("training on %lld + %lld images at %d px\n", static_cast<long long>(a.size()),
              static_cast<long long>(b.size()), cfg.image_size);

  agit::Trainer trainer(cfg);
  for (int epoch = trainer.epochs_done(); epoch < cfg.epochs; ++epoch) {
    const auto reports = trainer.train(a, b, opt.out, epoch + 1);
    for (const auto& mean : reports) print_epoch(epoch, cfg, mean);
  }
  std::printf("checkpoints written to %s\n", opt.out.c_str());
  return 0;
}

struct ApplyOptions {
  std::string ckpt;
  std::string data;
  std::string out;
  std::string split = "test";
  std::string direction = "xy";

  void attach(CLI::App* cmd, const std::string& default_out) {
    out = default_out;
    cmd->add_option("--ckpt", ckpt, "trainer checkpoint to load")->required();
    cmd->add_option("--data", data, "dataset root with trainA/trainB/testA/testB")->required();
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--split", split, "which split to read")->check(CLI::IsMember({"test", "train"}));
    cmd->add_option("--direction", direction, "translation direction")->check(CLI::IsMember({"xy", "yx"}));
  }

  agit::Split split_value() const { return split == "test" ? agit::Split::TEST : agit::Split::TRAIN; }
  agit::Domain source_domain() const { return direction == "xy" ? agit::Domain::X : agit::Domain::Y; }
};

int run_translate(const ApplyOptions& opt) {
  auto trainer = agit::Trainer::resume(opt.ckpt);
  const auto ds = agit::load_dataset(opt.data, opt.split_value(), opt.source_domain(), trainer.config());

  auto& forward = opt.direction == "xy" ? trainer.models().g_xy : trainer.models().g_yx;
  auto& reverse = opt.direction == "xy" ? trainer.models().g_yx : trainer.models().g_xy;

  const fs::path out_dir(opt.out);
  fs::create_directories(out_dir);
  const auto translated = agit::translate_batch(forward, ds.images);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    agit::write_image(out_dir / (ds.names[static_cast<std::size_t>(i)] + ".png"),
                      agit::tensor_to_image(translated, i));
  }
  const auto grids = agit::emit_grids(forward, &reverse, ds.images, out_dir / "grids");
  std::printf("translated %lld images to %s (%lld grids)\n", static_cast<long long>(ds.size()), opt.out.c_str(),
              static_cast<long long>(grids.size()));
  return 0;
}

int run_eval(const ApplyOptions& opt) {
  auto trainer = agit::Trainer::resume(opt.ckpt);
  const auto ds = agit::load_dataset(opt.data, opt.split_value(), opt.source_domain(), trainer.config());

  auto& forward = opt.direction == "xy" ? trainer.models().g_xy : trainer.models().g_yx;
  const auto report = agit::evaluate_translation(forward, ds.images, ds.names);

  const fs::path out_dir(opt.out);
  fs::create_directories(out_dir);
  agit::write_metric_records(out_dir / "metrics.jsonl", report);
  std::cout << agit::format_metric_table(report);
  std::printf("records written to %s\n", (out_dir / "metrics.jsonl").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-guided unpaired image-to-image translation"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth-data", "generate the synthetic two-domain corpus");
  std::string synth_out;
  int synth_n = 200;
  int synth_size = 64;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output root")->required();
  synth->add_option("--n", synth_n, "images per split and domain");
  synth->add_option("--size", synth_size, "square image size in pixels");
  synth->add_option("--seed", synth_seed, "generation seed");

  auto* train = app.add_subcommand("train", "train the translation model");
  TrainOptions train_opt;
  train_opt.attach(train);

  auto* translate = app.add_subcommand("translate", "apply a checkpoint to a dataset split");
  ApplyOptions translate_opt;
  translate_opt.attach(translate, "translated");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset split");
  ApplyOptions eval_opt;
  eval_opt.attach(eval, "eval");

  auto* ablate = app.add_subcommand("ablate", "train a reduced variant of the model");
  TrainOptions ablate_opt;
  std::string variant;
  ablate->add_option("--variant", variant, "which ingredients to drop")
      ->required()
      ->check(CLI::IsMember(agit::ablation_variant_names()));
  ablate_opt.attach(ablate);

  try {
    app.parse(argc, argv);

    if (synth->parsed()) {
      agit::synth_domains(synth_out, synth_n, synth_size, synth_seed);
      std::printf("wrote %d images per split and domain under %s\n", synth_n, synth_out.c_str());
      return 0;
    }
    if (train->parsed()) return run_training(train_opt.resolve(train), train_opt);
    if (translate->parsed()) return run_translate(translate_opt);
    if (eval->parsed()) return run_eval(eval_opt);
    if (ablate->parsed()) {
      const auto cfg = agit::apply_ablation(ablate_opt.resolve(ablate), agit::ablation_variant(variant));
      std::printf("variant %s\n", variant.c_str());
      return run_training(cfg, ablate_opt);
    }
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
