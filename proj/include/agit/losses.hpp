#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "agit/config.hpp"
#include "agit/discriminator.hpp"
#include "agit/errors.hpp"
#include "agit/tensor.hpp"
#include "agit/types.hpp"

namespace agit {

namespace detail {

// log(1 + exp(t)) without overflow; equals -log(sigmoid(-t)).
template <typename T>
T softplus(T t) {
  return t > T(0) ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

template <typename T>
T sigmoid(T t) {
  return T(1) / (T(1) + std::exp(-t));
}

template <typename T>
void require_nonempty(const Tensor<T>& scores, const char* what) {
  if (scores.numel() == 0) throw ContractError(std::string(what) + ": empty score batch");
}

}  // namespace detail

// Discriminator objective over raw (pre-squashing) scores.
//   least squares:       1/2 E[(real-1)^2] + 1/2 E[fake^2]
//   negative log form:  -E[log sig(real)] - E[log(1 - sig(fake))]
template <typename T>
T adversarial_loss_d(const Tensor<T>& real_scores, const Tensor<T>& fake_scores, GanLossForm form) {
  detail::require_nonempty(real_scores, "adversarial loss");
  detail::require_nonempty(fake_scores, "adversarial loss");
  double acc = 0.0;
  if (form == GanLossForm::LEAST_SQUARES) {
    for (std::int64_t i = 0; i < real_scores.numel(); ++i) {
      const double d = real_scores[i] - T(1);
      acc += 0.5 * d * d / real_scores.numel();
    }
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i) {
      acc += 0.5 * double(fake_scores[i]) * fake_scores[i] / fake_scores.numel();
    }
  } else {
    for (std::int64_t i = 0; i < real_scores.numel(); ++i) {
      acc += detail::softplus(-double(real_scores[i])) / real_scores.numel();
    }
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i) {
      acc += detail::softplus(double(fake_scores[i])) / fake_scores.numel();
    }
  }
  return static_cast<T>(acc);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> adversarial_loss_d_backward(const Tensor<T>& real_scores,
                                                            const Tensor<T>& fake_scores, GanLossForm form) {
  Tensor<T> d_real(real_scores.dims());
  Tensor<T> d_fake(fake_scores.dims());
  const T nr = static_cast<T>(real_scores.numel());
  const T nf = static_cast<T>(fake_scores.numel());
  if (form == GanLossForm::LEAST_SQUARES) {
    for (std::int64_t i = 0; i < real_scores.numel(); ++i) d_real[i] = (real_scores[i] - T(1)) / nr;
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i) d_fake[i] = fake_scores[i] / nf;
  } else {
    for (std::int64_t i = 0; i < real_scores.numel(); ++i) {
      d_real[i] = -(T(1) - detail::sigmoid(real_scores[i])) / nr;
    }
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i) d_fake[i] = detail::sigmoid(fake_scores[i]) / nf;
  }
  return {std::move(d_real), std::move(d_fake)};
}

// Generator objective over fake scores.
//   least squares:       1/2 E[(fake-1)^2]
//   negative log form:  -E[log sig(fake)]  (non-saturating)
template <typename T>
T adversarial_loss_g(const Tensor<T>& fake_scores, GanLossForm form) {
  detail::require_nonempty(fake_scores, "adversarial loss");
  double acc = 0.0;
  if (form == GanLossForm::LEAST_SQUARES) {
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i) {
      const double d = fake_scores[i] - T(1);
      acc += 0.5 * d * d / fake_scores.numel();
    }
  } else {
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i) {
      acc += detail::softplus(-double(fake_scores[i])) / fake_scores.numel();
    }
  }
  return static_cast<T>(acc);
}

template <typename T>
Tensor<T> adversarial_loss_g_backward(const Tensor<T>& fake_scores, GanLossForm form) {
  Tensor<T> d_fake(fake_scores.dims());
  const T n = static_cast<T>(fake_scores.numel());
  if (form == GanLossForm::LEAST_SQUARES) {
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i) d_fake[i] = (fake_scores[i] - T(1)) / n;
  } else {
    for (std::int64_t i = 0; i < fake_scores.numel(); ++i) {
      d_fake[i] = -(T(1) - detail::sigmoid(fake_scores[i])) / n;
    }
  }
  return d_fake;
}

// Reference evaluation of the attention-guided adversarial pair: the critic
// scores [mask, real] against [mask, fake] and both objectives are reported.
// The trainer re-derives the same quantities with gradient plumbing; this
// form exists for direct evaluation and tests.
template <typename T>
std::pair<T, T> attention_adversarial_losses(Discriminator<T>& d_att, const Tensor<T>& mask,
                                             const Tensor<T>& real_img, const Tensor<T>& fake_img,
                                             GanLossForm form) {
  Tensor<T> real_scores = discriminate_attended(d_att, mask, real_img);
  Tensor<T> fake_scores = discriminate_attended(d_att, mask, fake_img);
  return {adversarial_loss_d(real_scores, fake_scores, form), adversarial_loss_g(fake_scores, form)};
}

// Mean absolute difference over all elements.
template <typename T>
T l1_mean(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!a.same_dims(b)) {
    throw DimensionError(std::string(what) + ": dims " + Tensor<T>::dims_to_string(a.dims()) + " vs " +
                         Tensor<T>::dims_to_string(b.dims()));
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += std::abs(double(a[i]) - double(b[i]));
  return static_cast<T>(acc / a.numel());
}

// Gradient of l1_mean with respect to its first argument (negate for the
// second); sign(0) taken as 0.
template <typename T>
Tensor<T> l1_mean_backward(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> g(a.dims());
  const T n = static_cast<T>(a.numel());
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    g[i] = a[i] > b[i] ? T(1) / n : (a[i] < b[i] ? T(-1) / n : T(0));
  }
  return g;
}

// Both reconstruction directions summed: E|cycled_x - x| + E|cycled_y - y|.
template <typename T>
T cycle_loss(const Tensor<T>& x, const Tensor<T>& cycled_x, const Tensor<T>& y, const Tensor<T>& cycled_y) {
  return l1_mean(cycled_x, x, "cycle loss") + l1_mean(cycled_y, y, "cycle loss");
}

// Identity-style restraint of each translation against its own input:
// E|gen_y_from_x - x| + E|gen_x_from_y - y|.
template <typename T>
T pixel_loss(const Tensor<T>& x, const Tensor<T>& gen_y_from_x, const Tensor<T>& y,
             const Tensor<T>& gen_x_from_y) {
  return l1_mean(gen_y_from_x, x, "pixel loss") + l1_mean(gen_x_from_y, y, "pixel loss");
}

// Anisotropic total variation, summed (not averaged) over batch, channels,
// and interior neighbor pairs. Differences that would index past the border
// contribute nothing.
template <typename T>
T tv_loss(const Tensor<T>& mask) {
  double acc = 0.0;
  const std::int64_t h = mask.height(), w = mask.width();
  for (std::int64_t nc = 0; nc < mask.batch() * mask.channels(); ++nc) {
    const T* m = mask.data() + nc * h * w;
    for (std::int64_t i = 0; i < h; ++i) {
      for (std::int64_t j = 0; j < w; ++j) {
        if (j + 1 < w) acc += std::abs(double(m[i * w + j + 1]) - double(m[i * w + j]));
        if (i + 1 < h) acc += std::abs(double(m[(i + 1) * w + j]) - double(m[i * w + j]));
      }
    }
  }
  return static_cast<T>(acc);
}

template <typename T>
Tensor<T> tv_loss_backward(const Tensor<T>& mask) {
  Tensor<T> g(mask.dims());
  const std::int64_t h = mask.height(), w = mask.width();
  for (std::int64_t nc = 0; nc < mask.batch() * mask.channels(); ++nc) {
    const T* m = mask.data() + nc * h * w;
    T* gm = g.data() + nc * h * w;
    auto accumulate = [&](std::int64_t from, std::int64_t to) {
      if (m[to] > m[from]) {
        gm[to] += T(1);
        gm[from] -= T(1);
      } else if (m[to] < m[from]) {
        gm[to] -= T(1);
        gm[from] += T(1);
      }
    };
    for (std::int64_t i = 0; i < h; ++i) {
      for (std::int64_t j = 0; j < w; ++j) {
        if (j + 1 < w) accumulate(i * w + j, i * w + j + 1);
        if (i + 1 < h) accumulate(i * w + j, (i + 1) * w + j);
      }
    }
  }
  return g;
}

// Curriculum combination of all components:
//   total = r (lambda_cycle cycle + lambda_pixel pixel)
//         + (1 - r) (lambda_gan (gan terms) + lambda_tv (tv terms))
inline double full_objective(const LossReport& c, const TrainConfig& cfg, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw ContractError("curriculum weight r must lie in [0, 1]");
  const struct {
    const char* name;
    double v;
  } comps[] = {{"gan_xy", c.gan_xy}, {"gan_yx", c.gan_yx},  {"agan_xy", c.agan_xy}, {"agan_yx", c.agan_yx},
               {"cycle", c.cycle},   {"pixel", c.pixel},    {"tv_x", c.tv_x},       {"tv_y", c.tv_y}};
  for (const auto& comp : comps) {
    if (!std::isfinite(comp.v)) throw NumericError(std::string("loss component is not finite: ") + comp.name);
  }
  const double reconstruction = cfg.lambda_cycle * c.cycle + cfg.lambda_pixel * c.pixel;
  const double adversarial = cfg.lambda_gan * (c.gan_xy + c.gan_yx + c.agan_xy + c.agan_yx);
  const double attention = cfg.lambda_tv * (c.tv_x + c.tv_y);
  return r * reconstruction + (1.0 - r) * (adversarial + attention);
}

}  // namespace agit
