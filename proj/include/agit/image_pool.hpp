#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "agit/errors.hpp"
#include "agit/rng.hpp"
#include "agit/tensor.hpp"

namespace agit {

// History buffer of generated samples fed to the critics. Until the pool is
// full every query is stored and passed through; afterwards each incoming
// item either swaps with a uniformly chosen stored one (probability
// swap_prob) or passes through untouched.
//
// An item is a tuple of aligned parts (here: attention mask and image) kept
// together so a recalled sample never mixes parts from different steps.
template <typename T>
class ImagePool {
 public:
  ImagePool(std::int64_t capacity, std::uint64_t seed, double swap_prob = 0.5)
      : capacity_(capacity), swap_prob_(swap_prob), rng_(seed) {
    if (swap_prob < 0.0 || swap_prob > 1.0) throw ContractError("pool swap probability must lie in [0, 1]");
  }

  // parts[k] is a batch tensor; all parts share the batch size. Returns the
  // same layout with each item either passed through or recalled.
  std::vector<Tensor<T>> query(const std::vector<Tensor<T>>& parts) {
    if (parts.empty() || parts[0].batch() == 0) throw ContractError("pool query needs a nonempty batch");
    const std::int64_t n = parts[0].batch();
    for (const auto& p : parts) {
      if (p.batch() != n) throw DimensionError("pool query parts disagree on the batch axis");
    }

    std::vector<Tensor<T>> out;
    out.reserve(parts.size());
    for (const auto& p : parts) out.push_back(Tensor<T>(p.dims()));

    for (std::int64_t i = 0; i < n; ++i) {
      std::vector<Tensor<T>> item;
      item.reserve(parts.size());
      for (const auto& p : parts) item.push_back(slice_sample(p, i));

      if (capacity_ <= 0) {
        emit(out, i, item);
        continue;
      }
      if (static_cast<std::int64_t>(stored_.size()) < capacity_) {
        stored_.push_back(item);
        emit(out, i, item);
        continue;
      }
      ++full_queries_;
      if (rng_.bernoulli(swap_prob_)) {
        ++swaps_;
        const auto j = static_cast<std::size_t>(rng_.uniform_int(static_cast<std::uint64_t>(capacity_)));
        emit(out, i, stored_[j]);
        stored_[j] = std::move(item);
      } else {
        emit(out, i, item);
      }
    }
    return out;
  }

  Tensor<T> query(const Tensor<T>& batch) { return std::move(query(std::vector<Tensor<T>>{batch})[0]); }

  // Drops all contents and reseeds the sampling stream.
  void reset(std::uint64_t seed) {
    stored_.clear();
    rng_.reseed(seed);
    swaps_ = 0;
    full_queries_ = 0;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(stored_.size()); }
  std::int64_t capacity() const { return capacity_; }

  // Instrumentation for sampling-frequency checks.
  std::int64_t swap_count() const { return swaps_; }
  std::int64_t full_query_count() const { return full_queries_; }

 private:
  static void emit(std::vector<Tensor<T>>& out, std::int64_t index, const std::vector<Tensor<T>>& item) {
    for (std::size_t k = 0; k < out.size(); ++k) set_sample(out[k], index, item[k]);
  }

  std::int64_t capacity_;
  double swap_prob_;
  Rng rng_;
  std::vector<std::vector<Tensor<T>>> stored_;
  std::int64_t swaps_ = 0;
  std::int64_t full_queries_ = 0;
};

}  // namespace agit
