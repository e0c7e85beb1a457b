#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agit/checkpoint.hpp"
#include "agit/config.hpp"
#include "agit/dataset.hpp"
#include "agit/discriminator.hpp"
#include "agit/generator.hpp"
#include "agit/image_pool.hpp"
#include "agit/nn/adam.hpp"
#include "agit/types.hpp"

namespace agit {

// The trainable networks: a generator per direction, a vanilla critic per
// domain, and (unless ablated away) an attended critic per domain that
// judges mask/image pairs.
struct Models {
  Generator<float> g_xy;
  Generator<float> g_yx;
  Discriminator<float> d_x;
  Discriminator<float> d_y;
  std::optional<Discriminator<float>> d_xa;
  std::optional<Discriminator<float>> d_ya;

  explicit Models(const TrainConfig& cfg);

  void init(std::uint64_t seed);

  std::vector<nn::ParamRef<float>> generator_params();
  std::vector<nn::ParamRef<float>> discriminator_params();

  // Every named tensor across all groups, parameters and buffers alike.
  void collect_all(std::vector<nn::ParamRef<float>>& params, std::vector<nn::BufferRef<float>>& buffers);
};

// Mixing weight between the reconstruction-only warm phase and the main
// objective: r_warm for the first warm_epochs epochs, r_main after.
double curriculum_r(const TrainConfig& cfg, int epoch);

// Constant base rate, then linear decay to zero across the remaining epochs
// once decay_start_epoch is reached.
double learning_rate(const TrainConfig& cfg, int epoch);

// Alternating optimization: each step updates both generators against the
// composite objective, then updates all critics on replayed fakes. The
// critic update carries half the adversarial weight, matching an objective
// divided by two, and is skipped outright when the adversarial weight is
// zero (critic parameters then stay untouched).
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;
  Trainer(Trainer&&) = default;
  Trainer& operator=(Trainer&&) = default;

  Models& models() { return models_; }
  const TrainConfig& config() const { return cfg_; }

  int epochs_done() const { return epoch_; }
  void set_epoch(int epoch) { epoch_ = epoch; }
  std::int64_t steps_done() const { return step_; }

  // Generator-side loss values for every step taken, in order, plus the
  // weighted critic losses from the alternate step.
  const std::vector<LossReport>& step_trace() const { return step_trace_; }
  const std::vector<double>& critic_trace() const { return d_trace_; }

  // Unweighted sum of the critic adversarial losses from the most recent
  // critic update, for checking the half-weight relation.
  double last_critic_raw() const { return last_d_raw_; }
  double last_critic_weighted() const { return last_d_weighted_; }

  // One generator update followed by one critic update on matched batches.
  LossReport train_step(const Tensor<float>& x, const Tensor<float>& y);

  // Runs epochs until cfg.epochs, one pass over the larger domain each (the
  // smaller domain cycles). Returns the per-epoch mean reports for the
  // epochs this call ran. A nonempty checkpoint_dir gets a checkpoint per
  // epoch plus a rolling latest.ckpt. A non-negative until_epoch pauses the
  // run there (schedules still follow cfg.epochs) so it can be resumed.
  std::vector<LossReport> train(const UnpairedDataset& a, const UnpairedDataset& b,
                                const std::filesystem::path& checkpoint_dir = {}, int until_epoch = -1);

  Checkpoint snapshot();
  void save(const std::filesystem::path& path);

  // Installs a checkpoint's tensors, optimizer moments and counters. Any
  // missing, extra or reshaped tensor aborts with a diff naming them.
  void restore(const Checkpoint& ck);

  static Trainer resume(const std::filesystem::path& checkpoint_path);

 private:
  LossReport run_epoch(const UnpairedDataset& a, const UnpairedDataset& b);

  TrainConfig cfg_;
  Models models_;
  nn::Adam<float> opt_g_;
  nn::Adam<float> opt_d_;
  ImagePool<float> pool_x_;
  ImagePool<float> pool_y_;
  std::vector<nn::ParamRef<float>> gen_params_;
  std::vector<nn::ParamRef<float>> disc_params_;
  int epoch_ = 0;
  std::int64_t step_ = 0;
  std::vector<LossReport> step_trace_;
  std::vector<double> d_trace_;
  double last_d_raw_ = 0.0;
  double last_d_weighted_ = 0.0;
};

}  // namespace agit
