#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "agit/nn/layers.hpp"
#include "agit/tensor.hpp"

namespace agit::nn {

// Adam with bias correction. Moment buffers are keyed by parameter name so
// optimizer state survives checkpointing by name alongside the parameters.
template <typename T>
class Adam {
 public:
  struct Slot {
    Tensor<T> m;
    Tensor<T> v;
  };

  Adam(double beta1, double beta2, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamRef<T>>& params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const auto& ref : params) {
      Slot& slot = slots_[ref.name];
      if (slot.m.numel() != ref.param->value.numel()) {
        slot.m = Tensor<T>(ref.param->value.dims());
        slot.v = Tensor<T>(ref.param->value.dims());
      }
      Tensor<T>& p = ref.param->value;
      const Tensor<T>& g = ref.param->grad;
      for (std::int64_t i = 0; i < p.numel(); ++i) {
        const double gi = g[i];
        const double m = beta1_ * slot.m[i] + (1.0 - beta1_) * gi;
        const double v = beta2_ * slot.v[i] + (1.0 - beta2_) * gi * gi;
        slot.m[i] = static_cast<T>(m);
        slot.v[i] = static_cast<T>(v);
        p[i] -= static_cast<T>(lr * (m / bc1) / (std::sqrt(v / bc2) + eps_));
      }
    }
  }

  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }

  std::map<std::string, Slot>& slots() { return slots_; }
  const std::map<std::string, Slot>& slots() const { return slots_; }

  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<std::string, Slot> slots_;
};

}  // namespace agit::nn
