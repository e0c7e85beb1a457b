#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "agit/config.hpp"
#include "agit/tensor.hpp"

namespace agit {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Full training state: every named model tensor (parameters and batch-norm
// buffers, prefixed by network group), optimizer moments, progress counters
// and the config the run was started with. Replay-pool contents are
// deliberately absent; pools rebuild per epoch from seed-derived streams.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  int epoch = 0;         // completed epochs
  std::int64_t step = 0; // completed optimizer steps
  std::int64_t opt_g_steps = 0;
  std::int64_t opt_d_steps = 0;
  TrainConfig config;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace agit
