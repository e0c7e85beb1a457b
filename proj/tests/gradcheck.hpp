#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "agit/tensor.hpp"

namespace testutil {

// Central-difference slope of f with respect to one scalar slot.
inline double fd_slope(const std::function<double()>& f, double* slot, double h) {
  const double orig = *slot;
  *slot = orig + h;
  const double fp = f();
  *slot = orig - h;
  const double fm = f();
  *slot = orig;
  return (fp - fm) / (2.0 * h);
}

// Worst relative error between an analytic gradient and central differences,
// elementwise over `values`. The denominator max(1, |num|, |analytic|) turns
// the criterion into an absolute one for small gradients, where difference
// quotients bottom out in rounding noise.
inline double max_rel_err(const std::function<double()>& f, agit::Tensor<double>& values,
                          const agit::Tensor<double>& analytic, double h = 1e-3) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < values.numel(); ++i) {
    const double num = fd_slope(f, &values[i], h);
    const double den = std::max({1.0, std::abs(num), std::abs(analytic[i])});
    worst = std::max(worst, std::abs(num - analytic[i]) / den);
  }
  return worst;
}

}  // namespace testutil
