#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "agit/ablation.hpp"
#include "agit/config.hpp"
#include "agit/dataset.hpp"
#include "agit/generator.hpp"
#include "agit/image_pool.hpp"
#include "agit/losses.hpp"
#include "agit/metrics.hpp"
#include "agit/rng.hpp"
#include "agit/trainer.hpp"

namespace fs = std::filesystem;
using agit::Rng;
using agit::Tensor;
using agit::TrainConfig;

namespace {

// Every tolerance the acceptance run enforces, in one place.
constexpr double kFuseTol = 1e-6;
constexpr double kGradRelTol = 1e-4;
constexpr double kTvTol = 1e-9;
constexpr double kObjectiveTol = 1e-12;
constexpr double kMetricTol = 1e-9;
constexpr double kSwapLow = 0.47;
constexpr double kSwapHigh = 0.53;
constexpr double kCycleRatio = 0.5;
constexpr double kMaskMajority = 0.60;
constexpr double kFusionBudgetSeconds = 10.0;
constexpr double kGradientBudgetSeconds = 120.0;
constexpr double kTrainingTargetSeconds = 1800.0;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw Failure(msg);
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
Tensor<T> random_tensor(Rng& rng, const std::vector<std::int64_t>& dims, double lo, double hi) {
  Tensor<T> t(dims);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Values on a jittered permutation lattice: pairwise distinct with a gap of
// at least 0.25/numel, so subgradient kinks of L1-style losses stay far from
// the finite-difference probes.
template <typename T>
Tensor<T> spread_tensor(Rng& rng, const std::vector<std::int64_t>& dims) {
  Tensor<T> t(dims);
  const std::int64_t n = t.numel();
  std::vector<std::int64_t> slot(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) slot[static_cast<std::size_t>(i)] = i;
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
    std::swap(slot[static_cast<std::size_t>(i)], slot[static_cast<std::size_t>(j)]);
  }
  for (std::int64_t i = 0; i < n; ++i) {
    t[i] = static_cast<T>((slot[static_cast<std::size_t>(i)] + 0.25 + 0.5 * rng.uniform()) / n);
  }
  return t;
}

// Central finite differences against an analytic gradient, element by
// element. Slots where both sides vanish are agreement at the scale floor.
struct GradChecker {
  double worst = 0.0;
  std::int64_t compared = 0;

  void check(double analytic, double numeric, const char* what) {
    const double mag = std::max(std::abs(analytic), std::abs(numeric));
    if (mag < 1e-7) return;
    const double rel = std::abs(analytic - numeric) / mag;
    worst = std::max(worst, rel);
    ++compared;
    require(rel < kGradRelTol,
            fmt("%s gradient: analytic %.10g vs central difference %.10g (relative error %.3g)", what, analytic,
                numeric, rel));
  }

  template <typename T, typename F>
  void sweep(Tensor<T>& input, const Tensor<T>& analytic, F&& eval, const char* what, double h = 1e-6) {
    require(input.same_dims(analytic), std::string(what) + ": analytic gradient dims mismatch");
    for (std::int64_t i = 0; i < input.numel(); ++i) {
      const T keep = input[i];
      input[i] = keep + static_cast<T>(h);
      const double up = eval();
      input[i] = keep - static_cast<T>(h);
      const double down = eval();
      input[i] = keep;
      check(static_cast<double>(analytic[i]), (up - down) / (2.0 * h), what);
    }
  }
};

std::vector<std::int64_t> random_hw(Rng& rng, std::int64_t cap) {
  return {1 + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(cap))),
          1 + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(cap)))};
}

Tensor<float> toy_batch(std::int64_t n, int s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t({n, 3, s, s});
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = static_cast<float>(rng.uniform(-0.9, 0.9));
  return t;
}

fs::path fresh_dir(const char* leaf) {
  const auto dir = fs::temp_directory_path() / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// --- criterion 1: fusion algebra ------------------------------------------

std::string criterion_1() {
  const auto start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto hw = random_hw(rng, 8);
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform_int(2));
    const auto x = random_tensor<float>(rng, {n, 3, hw[0], hw[1]}, -1.0, 1.0);
    const auto content = random_tensor<float>(rng, {n, 3, hw[0], hw[1]}, -1.0, 1.0);
    const auto mask = random_tensor<float>(rng, {n, 1, hw[0], hw[1]}, 0.0, 1.0);

    Tensor<float> zeros(mask.dims());
    Tensor<float> ones(mask.dims());
    ones.fill(1.0f);

    const auto keep = agit::fuse(x, zeros, content);
    const auto swap = agit::fuse(x, ones, content);
    const auto blend = agit::fuse(x, mask, content);

    const std::int64_t plane = hw[0] * hw[1];
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(keep[i]) - x[i]));
      worst = std::max(worst, std::abs(static_cast<double>(swap[i]) - content[i]));
      require(std::abs(static_cast<double>(keep[i]) - x[i]) <= kFuseTol, "zero mask must reproduce the input");
      require(std::abs(static_cast<double>(swap[i]) - content[i]) <= kFuseTol,
              "unit mask must reproduce the content");

      const std::int64_t nn = i / (3 * plane);
      const std::int64_t p = i % plane;
      const double m = mask[nn * plane + p];
      require(m >= 0.0 && m <= 1.0, "mask sample left [0, 1]");
      const double lo = std::min(x[i], content[i]) - kFuseTol;
      const double hi = std::max(x[i], content[i]) + kFuseTol;
      require(blend[i] >= lo && blend[i] <= hi, "fused value escaped the convex hull of input and content");
    }
  }
  const double elapsed = seconds_since(start);
  require(elapsed < kFusionBudgetSeconds, fmt("fusion sweep took %.2f s, budget %.0f s", elapsed, kFusionBudgetSeconds));
  return fmt("1000 triples, identities and hull bounds within %.1e (worst %.2e), %.2f s", kFuseTol, worst, elapsed);
}

// --- criterion 2: gradient suite ------------------------------------------

std::string criterion_2() {
  const auto start = Clock::now();
  GradChecker gc;
  Rng rng(202);
  const agit::GanLossForm forms[2] = {agit::GanLossForm::LEAST_SQUARES, agit::GanLossForm::NEG_LOG_LIKELIHOOD};

  for (int trial = 0; trial < 100; ++trial) {
    const auto hw = random_hw(rng, 4);
    const std::vector<std::int64_t> img_dims = {1, 3, hw[0], hw[1]};
    const std::vector<std::int64_t> mask_dims = {1, 1, hw[0], hw[1]};

    {
      auto x = random_tensor<double>(rng, img_dims, -1.0, 1.0);
      auto content = random_tensor<double>(rng, img_dims, -1.0, 1.0);
      auto mask = random_tensor<double>(rng, mask_dims, 0.05, 0.95);
      const auto weight = random_tensor<double>(rng, img_dims, -1.0, 1.0);
      auto eval = [&] {
        const auto out = agit::fuse(x, mask, content);
        double s = 0.0;
        for (std::int64_t i = 0; i < out.numel(); ++i) s += weight[i] * out[i];
        return s;
      };
      const auto grads = agit::fuse_backward(weight, x, mask, content);
      gc.sweep(x, grads.d_x, eval, "fuse/input");
      gc.sweep(mask, grads.d_mask, eval, "fuse/mask");
      gc.sweep(content, grads.d_content, eval, "fuse/content");
    }

    const auto form = forms[trial % 2];
    {
      auto real = random_tensor<double>(rng, mask_dims, -2.0, 2.0);
      auto fake = random_tensor<double>(rng, mask_dims, -2.0, 2.0);
      auto eval = [&] { return static_cast<double>(agit::adversarial_loss_d(real, fake, form)); };
      const auto [d_real, d_fake] = agit::adversarial_loss_d_backward(real, fake, form);
      gc.sweep(real, d_real, eval, "adversarial_d/real");
      gc.sweep(fake, d_fake, eval, "adversarial_d/fake");

      auto eval_g = [&] { return static_cast<double>(agit::adversarial_loss_g(fake, form)); };
      const auto d_fake_g = agit::adversarial_loss_g_backward(fake, form);
      gc.sweep(fake, d_fake_g, eval_g, "adversarial_g/fake");
    }

    {
      auto x = random_tensor<double>(rng, img_dims, -1.0, 1.0);
      auto y = random_tensor<double>(rng, img_dims, -1.0, 1.0);
      Tensor<double> cx(img_dims), cy(img_dims);
      for (std::int64_t i = 0; i < cx.numel(); ++i) {
        const double sx = rng.bernoulli(0.5) ? 1.0 : -1.0;
        const double sy = rng.bernoulli(0.5) ? 1.0 : -1.0;
        cx[i] = x[i] + sx * (1e-3 + 0.5 * rng.uniform());
        cy[i] = y[i] + sy * (1e-3 + 0.5 * rng.uniform());
      }
      auto eval = [&] { return static_cast<double>(agit::cycle_loss(x, cx, y, cy)); };
      auto d_cx = agit::l1_mean_backward(cx, x);
      auto d_cy = agit::l1_mean_backward(cy, y);
      Tensor<double> d_x(img_dims), d_y(img_dims);
      for (std::int64_t i = 0; i < d_x.numel(); ++i) {
        d_x[i] = -d_cx[i];
        d_y[i] = -d_cy[i];
      }
      gc.sweep(cx, d_cx, eval, "cycle/reconstruction_x");
      gc.sweep(cy, d_cy, eval, "cycle/reconstruction_y");
      gc.sweep(x, d_x, eval, "cycle/input_x");
      gc.sweep(y, d_y, eval, "cycle/input_y");

      auto eval_pixel = [&] { return static_cast<double>(agit::pixel_loss(x, cx, y, cy)); };
      gc.sweep(cx, d_cx, eval_pixel, "pixel/translated_x");
      gc.sweep(cy, d_cy, eval_pixel, "pixel/translated_y");
    }

    {
      auto mask = spread_tensor<double>(rng, mask_dims);
      auto eval = [&] { return static_cast<double>(agit::tv_loss(mask)); };
      const auto d_mask = agit::tv_loss_backward(mask);
      gc.sweep(mask, d_mask, eval, "tv/mask", 1e-7);
    }

    {
      agit::LossReport rep;
      rep.gan_xy = rng.uniform(0.01, 2.0);
      rep.gan_yx = rng.uniform(0.01, 2.0);
      rep.agan_xy = rng.uniform(0.01, 2.0);
      rep.agan_yx = rng.uniform(0.01, 2.0);
      rep.cycle = rng.uniform(0.01, 2.0);
      rep.pixel = rng.uniform(0.01, 2.0);
      rep.tv_x = rng.uniform(0.0, 5.0);
      rep.tv_y = rng.uniform(0.0, 5.0);
      TrainConfig cfg;
      cfg.lambda_gan = rng.uniform(0.0, 2.0);
      cfg.lambda_cycle = rng.uniform(0.0, 12.0);
      cfg.lambda_pixel = rng.uniform(0.0, 3.0);
      cfg.lambda_tv = rng.uniform(0.0, 1.0);
      const double r = rng.uniform(0.0, 1.0);

      double* fields[8] = {&rep.gan_xy, &rep.gan_yx, &rep.agan_xy, &rep.agan_yx,
                           &rep.cycle,  &rep.pixel,  &rep.tv_x,    &rep.tv_y};
      const double coeffs[8] = {(1 - r) * cfg.lambda_gan, (1 - r) * cfg.lambda_gan, (1 - r) * cfg.lambda_gan,
                                (1 - r) * cfg.lambda_gan, r * cfg.lambda_cycle,     r * cfg.lambda_pixel,
                                (1 - r) * cfg.lambda_tv,  (1 - r) * cfg.lambda_tv};
      for (int f = 0; f < 8; ++f) {
        const double keep = *fields[f];
        const double h = 1e-6;
        *fields[f] = keep + h;
        const double up = agit::full_objective(rep, cfg, r);
        *fields[f] = keep - h;
        const double down = agit::full_objective(rep, cfg, r);
        *fields[f] = keep;
        gc.check(coeffs[f], (up - down) / (2 * h), "full_objective/component");
      }
    }
  }

  const double elapsed = seconds_since(start);
  require(elapsed < kGradientBudgetSeconds,
          fmt("gradient sweep took %.1f s, budget %.0f s", elapsed, kGradientBudgetSeconds));
  return fmt("%lld derivatives within %.0e of central differences (worst %.2e), %.1f s",
             static_cast<long long>(gc.compared), kGradRelTol, gc.worst, elapsed);
}

// --- criterion 3: total variation oracle ----------------------------------

double tv_oracle(const Tensor<double>& m) {
  const std::int64_t n = m.batch(), c = m.channels(), h = m.height(), w = m.width();
  double acc = 0.0;
  for (std::int64_t nn = 0; nn < n; ++nn) {
    for (std::int64_t cc = 0; cc < c; ++cc) {
      for (std::int64_t i = 0; i < h; ++i) {
        for (std::int64_t j = 0; j < w; ++j) {
          const auto at = [&](std::int64_t ii, std::int64_t jj) {
            return m[((nn * c + cc) * h + ii) * w + jj];
          };
          if (j + 1 < w) acc += std::abs(at(i, j + 1) - at(i, j));
          if (i + 1 < h) acc += std::abs(at(i + 1, j) - at(i, j));
        }
      }
    }
  }
  return acc;
}

std::string criterion_3() {
  // Literal anchors first, so the oracle itself is pinned by hand values.
  {
    Tensor<double> zeros({1, 1, 3, 3});
    require(agit::tv_loss(zeros) == 0.0, "flat mask must have zero variation");

    Tensor<double> center({1, 1, 3, 3});
    center[4] = 1.0;
    require(agit::tv_loss(center) == 4.0, "single center pixel in 3x3 must give variation 4");

    Tensor<double> checker({1, 1, 3, 3});
    for (std::int64_t i = 0; i < 9; ++i) checker[i] = static_cast<double>((i / 3 + i % 3) % 2);
    require(agit::tv_loss(checker) == 12.0, "3x3 checkerboard must give variation 12");
  }

  std::int64_t binary_masks = 0;
  for (std::int64_t h = 1; h <= 9; ++h) {
    for (std::int64_t w = 1; w <= 9; ++w) {
      const std::int64_t cells = h * w;
      if (cells > 9) continue;
      for (std::uint64_t bits = 0; bits < (1ULL << cells); ++bits) {
        Tensor<double> m({1, 1, h, w});
        for (std::int64_t i = 0; i < cells; ++i) m[i] = (bits >> i) & 1ULL ? 1.0 : 0.0;
        const double got = agit::tv_loss(m);
        const double want = tv_oracle(m);
        require(got == want, fmt("binary %lldx%lld mask %llu: tv %.17g vs oracle %.17g", static_cast<long long>(h),
                                 static_cast<long long>(w), static_cast<unsigned long long>(bits), got, want));
        ++binary_masks;
      }
    }
  }

  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto hw = random_hw(rng, 5);
    const auto m = random_tensor<double>(rng, {1, 1, hw[0], hw[1]}, 0.0, 1.0);
    const double diff = std::abs(static_cast<double>(agit::tv_loss(m)) - tv_oracle(m));
    worst = std::max(worst, diff);
    require(diff <= kTvTol, fmt("random mask: |tv - oracle| = %.3g", diff));
  }
  return fmt("%lld binary masks exact, 1000 random masks within %.0e (worst %.2e)",
             static_cast<long long>(binary_masks), kTvTol, worst);
}

// --- criterion 4: curriculum and objective arithmetic ----------------------

std::string criterion_4() {
  TrainConfig cfg;
  agit::LossReport rep;
  rep.cycle = 2.0;
  rep.pixel = 1.0;
  rep.gan_xy = rep.gan_yx = rep.agan_xy = rep.agan_yx = 0.5;
  rep.tv_x = rep.tv_y = 0.0;

  const double total = agit::full_objective(rep, cfg, 0.01);
  require(std::abs(total - 1.20) <= kObjectiveTol,
          fmt("hand-computed objective: got %.17g, want 1.20 within %.0e", total, kObjectiveTol));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double r = agit::curriculum_r(cfg, epoch);
    const double want = epoch < 10 ? 0.01 : 0.5;
    require(r == want, fmt("curriculum weight at epoch %d: got %.17g, want %.17g", epoch, r, want));
  }
  return fmt("objective 1.20 within %.0e; r switches 0.01 -> 0.5 exactly at epoch 10", kObjectiveTol);
}

// --- criterion 5: replay buffer -------------------------------------------

std::string criterion_5() {
  agit::ImagePool<float> pool(50, 505, 0.5);

  for (int i = 0; i < 50; ++i) {
    Tensor<float> item({1, 1, 2, 2});
    item.fill(static_cast<float>(i));
    const auto out = pool.query(item);
    for (std::int64_t e = 0; e < out.numel(); ++e) {
      require(out[e] == static_cast<float>(i), fmt("warm-up insertion %d came back altered", i));
    }
  }
  require(pool.size() == 50, "pool failed to retain the warm-up items");

  std::int64_t swapped = 0;
  const int queries = 10000;
  for (int i = 0; i < queries; ++i) {
    Tensor<float> item({1, 1, 2, 2});
    item.fill(static_cast<float>(1000 + i));
    const auto out = pool.query(item);
    if (out[0] != static_cast<float>(1000 + i)) ++swapped;
  }
  require(pool.full_query_count() == queries, "full-pool query counter drifted");
  require(pool.swap_count() == swapped, "observed swaps disagree with the pool's own count");

  const double frequency = static_cast<double>(swapped) / queries;
  require(frequency >= kSwapLow && frequency <= kSwapHigh,
          fmt("swap frequency %.4f outside [%.2f, %.2f]", frequency, kSwapLow, kSwapHigh));
  return fmt("50 warm-up insertions exact; swap frequency %.4f over %d full queries", frequency, queries);
}

// --- criterion 6: determinism and resume ----------------------------------

TrainConfig determinism_cfg() {
  TrainConfig cfg;
  cfg.image_size = 32;
  cfg.channel_scale = 0.05;
  cfg.epochs = 4;
  cfg.warm_epochs = 1;
  cfg.decay_start_epoch = 2;
  cfg.seed = 2024;
  return cfg;
}

bool reports_identical(const agit::LossReport& a, const agit::LossReport& b) {
  return a.gan_xy == b.gan_xy && a.gan_yx == b.gan_yx && a.agan_xy == b.agan_xy && a.agan_yx == b.agan_yx &&
         a.cycle == b.cycle && a.pixel == b.pixel && a.tv_x == b.tv_x && a.tv_y == b.tv_y && a.total == b.total;
}

void require_same_tensors(agit::Checkpoint& a, agit::Checkpoint& b, const char* what) {
  require(a.tensors.size() == b.tensors.size(), fmt("%s: tensor counts differ", what));
  for (const auto& [name, ta] : a.tensors) {
    const auto* tb = b.find(name);
    require(tb != nullptr, fmt("%s: tensor %s missing", what, name.c_str()));
    require(ta.dims() == tb->dims(), fmt("%s: tensor %s reshaped", what, name.c_str()));
    require(std::memcmp(ta.data(), tb->data(), sizeof(float) * static_cast<std::size_t>(ta.numel())) == 0,
            fmt("%s: tensor %s differs bitwise", what, name.c_str()));
  }
}

std::string criterion_6() {
  const auto root = fresh_dir("agit_acc6_data");
  agit::synth_domains(root, 50, 32, 7);
  const auto cfg = determinism_cfg();
  const auto a = agit::load_dataset(root, agit::Split::TRAIN, agit::Domain::X, cfg);
  const auto b = agit::load_dataset(root, agit::Split::TRAIN, agit::Domain::Y, cfg);

  agit::Trainer first(cfg);
  first.train(a, b);
  require(first.steps_done() == 200, fmt("expected 200 steps, ran %lld", static_cast<long long>(first.steps_done())));

  agit::Trainer second(cfg);
  second.train(a, b);
  require(first.step_trace().size() == second.step_trace().size(), "repeat run took a different number of steps");
  for (std::size_t i = 0; i < first.step_trace().size(); ++i) {
    require(reports_identical(first.step_trace()[i], second.step_trace()[i]),
            fmt("loss traces diverge at step %zu", i));
  }
  require(first.critic_trace() == second.critic_trace(), "critic traces diverge");

  auto snap_first = first.snapshot();
  auto snap_second = second.snapshot();
  require_same_tensors(snap_first, snap_second, "repeat run");

  const auto ckpt_dir = fresh_dir("agit_acc6_ckpt");
  agit::Trainer half(cfg);
  half.train(a, b, ckpt_dir, 2);
  require(half.epochs_done() == 2, "paused run did not stop at epoch 2");

  auto resumed = agit::Trainer::resume(ckpt_dir / "latest.ckpt");
  resumed.train(a, b);
  require(resumed.steps_done() == 200, "resumed run lost the step counter");

  const auto& tail = resumed.step_trace();
  require(tail.size() == 100, fmt("resumed run recorded %zu steps, want 100", tail.size()));
  for (std::size_t i = 0; i < tail.size(); ++i) {
    require(reports_identical(tail[i], first.step_trace()[100 + i]),
            fmt("resumed trace diverges at resumed step %zu", i));
  }

  auto snap_resumed = resumed.snapshot();
  require_same_tensors(snap_first, snap_resumed, "resumed run");
  return "two 200-step runs bitwise identical; checkpoint-resume matches the uninterrupted run";
}

// --- criterion 7: synthetic training progress ------------------------------

std::string criterion_7() {
  const auto root = fresh_dir("agit_acc7_data");
  agit::synth_domains(root, 200, 64, 11);

  TrainConfig cfg;
  cfg.image_size = 64;
  cfg.channel_scale = 0.5;
  cfg.epochs = 10;
  cfg.warm_epochs = 0;
  cfg.decay_start_epoch = 9;
  cfg.seed = 77;

  const auto a = agit::load_dataset(root, agit::Split::TRAIN, agit::Domain::X, cfg);
  const auto b = agit::load_dataset(root, agit::Split::TRAIN, agit::Domain::Y, cfg);

  agit::Trainer trainer(cfg);
  const auto start = Clock::now();
  trainer.train(a, b);
  const double train_seconds = seconds_since(start);

  const auto& trace = trainer.step_trace();
  require(trace.size() == 2000, fmt("expected 2000 steps, ran %zu", trace.size()));

  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 200; ++i) {
    head += trace[static_cast<std::size_t>(i)].cycle;
    tail += trace[static_cast<std::size_t>(1800 + i)].cycle;
  }
  head /= 200.0;
  tail /= 200.0;
  require(tail < kCycleRatio * head,
          fmt("cycle loss means: first 200 steps %.4f, final 200 steps %.4f (need < %.0f%%)", head, tail,
              100.0 * kCycleRatio));

  const auto test = agit::load_dataset(root, agit::Split::TEST, agit::Domain::X, cfg);
  std::int64_t localized = 0;
  for (std::int64_t i = 0; i < test.size(); ++i) {
    const auto sample = agit::slice_sample(test.images, i);
    const auto heads = trainer.models().g_xy.forward(sample, false);
    require(!heads.attention.empty(), "trained generator lost its attention head");
    const auto gt = agit::load_sidecar_mask(root, agit::Split::TEST, agit::Domain::X,
                                            test.names[static_cast<std::size_t>(i)], cfg.image_size);

    double inside = 0.0, outside = 0.0;
    std::int64_t inside_n = 0, outside_n = 0;
    for (std::int64_t p = 0; p < gt.numel(); ++p) {
      if (gt[p] > 0.5) {
        inside += heads.attention[p];
        ++inside_n;
      } else {
        outside += heads.attention[p];
        ++outside_n;
      }
    }
    require(inside_n > 0 && outside_n > 0, "sidecar mask degenerate");
    if (inside / inside_n > outside / outside_n) ++localized;
  }
  const double fraction = static_cast<double>(localized) / static_cast<double>(test.size());
  require(fraction >= kMaskMajority, fmt("attention localized on %lld/%lld test images (%.0f%%), need >= %.0f%%",
                                         static_cast<long long>(localized), static_cast<long long>(test.size()),
                                         100.0 * fraction, 100.0 * kMaskMajority));

  const char* budget_note = train_seconds < kTrainingTargetSeconds ? "within" : "over";
  return fmt("cycle %.4f -> %.4f (%.0f%% drop); attention localized on %lld/%lld test images; 2000 steps in %.0f s "
             "(%s the 30 min target)",
             head, tail, 100.0 * (1.0 - tail / head), static_cast<long long>(localized),
             static_cast<long long>(test.size()), train_seconds, budget_note);
}

// --- criterion 8: metrics --------------------------------------------------

std::string criterion_8() {
  agit::Image8 zeros(2, 2, 3);
  require(agit::mse(zeros, zeros) == 0.0, "identical images must have zero error");
  const double saturated = agit::psnr_from_mse(0.0);
  require(agit::psnr_saturated(saturated), "zero error must saturate psnr");
  require(saturated == agit::kPsnrSaturated, "saturation sentinel mismatch");

  agit::Image8 far(2, 2, 3);
  std::fill(far.pixels.begin(), far.pixels.end(), std::uint8_t{255});
  require(std::abs(agit::mse(zeros, far) - 65025.0) <= kMetricTol, "255-everywhere must give mse 65025");
  require(std::abs(agit::psnr(zeros, far) - 0.0) <= kMetricTol, "mse 65025 must give 0 dB");

  // Squared differences {2500, 100, 1, 0} average to 650.25 exactly.
  agit::Image8 base(2, 2, 1);
  agit::Image8 near(2, 2, 1);
  near.pixels = {50, 10, 1, 0};
  require(std::abs(agit::mse(base, near) - 650.25) <= kMetricTol, "diffs {50,10,1,0} must give mse 650.25");
  require(std::abs(agit::psnr(base, near) - 20.0) <= kMetricTol, "mse 650.25 must give 20 dB");
  require(std::abs(agit::psnr_from_mse(650.25) - 20.0) <= kMetricTol, "mse 650.25 must give 20 dB");

  std::vector<agit::ImageMetrics> per = {{"low", 100.0, agit::psnr_from_mse(100.0)},
                                         {"high", 400.0, agit::psnr_from_mse(400.0)}};
  const auto report = agit::aggregate_metrics(per, "reference images");
  require(std::abs(report.mean_mse - 250.0) <= kMetricTol, "mean mse aggregation drifted");
  require(std::abs(report.psnr_of_mean_mse - 10.0 * std::log10(65025.0 / 250.0)) <= kMetricTol,
          "psnr of the mean mse drifted");
  require(std::abs(report.mean_psnr - 0.5 * (10.0 * std::log10(65025.0 / 100.0) + 10.0 * std::log10(65025.0 / 400.0))) <=
              kMetricTol,
          "mean of per-image psnr drifted");
  require(report.psnr_of_mean_mse != report.mean_psnr, "the two aggregation orders must be distinguishable");

  const auto table = agit::format_metric_table(report);
  require(table.find("psnr of mean mse") != std::string::npos, "table must label psnr-of-mean-mse");
  require(table.find("mean psnr") != std::string::npos, "table must label mean psnr");
  return fmt("hand cases 0/65025/650.25 within %.0e; both aggregation orders emitted and labeled", kMetricTol);
}

// --- criterion 9: ablation wiring ------------------------------------------

std::string criterion_9() {
  TrainConfig base;
  base.image_size = 32;
  base.channel_scale = 0.05;
  base.epochs = 4;
  base.warm_epochs = 1;
  base.decay_start_epoch = 2;
  base.buffer_size = 4;
  base.seed = 909;

  const auto x = toy_batch(1, 32, 15);
  const auto y = toy_batch(1, 32, 16);

  std::string summary;
  for (const auto& name : agit::ablation_variant_names()) {
    const auto cfg = agit::apply_ablation(base, agit::ablation_variant(name));
    agit::Trainer trainer(cfg);
    const auto rep = trainer.train_step(x, y);
    const double r = agit::curriculum_r(cfg, 0);
    require(rep.total == agit::full_objective(rep, cfg, r), fmt("%s: reported total drifted", name.c_str()));

    std::map<std::string, double> contribution;
    contribution["gan"] = (1 - r) * cfg.lambda_gan * (rep.gan_xy + rep.gan_yx);
    contribution["agan"] = (1 - r) * cfg.lambda_gan * (rep.agan_xy + rep.agan_yx);
    contribution["cycle"] = r * cfg.lambda_cycle * rep.cycle;
    contribution["pixel"] = r * cfg.lambda_pixel * rep.pixel;
    contribution["tv"] = (1 - r) * cfg.lambda_tv * (rep.tv_x + rep.tv_y);

    std::set<std::string> removed;
    if (name != "full") removed.insert("agan");
    if (name == "-ad-pl" || name == "-ad-pl-al") removed.insert("pixel");
    if (name == "-ad-ag" || name == "-ad-al" || name == "-ad-pl-al") removed.insert("tv");

    for (const auto& [term, value] : contribution) {
      if (removed.count(term)) {
        require(value == 0.0, fmt("%s: removed term %s contributes %.3g", name.c_str(), term.c_str(), value));
      } else {
        require(value != 0.0, fmt("%s: retained term %s contributes nothing", name.c_str(), term.c_str()));
      }
    }
    summary += name + " ";
  }
  return fmt("removed terms contribute exactly 0, retained terms nonzero across: %s", summary.c_str());
}

// --- criterion 10: architecture conformance ---------------------------------

std::vector<std::vector<std::int64_t>> expected_trunk_shapes(std::int64_t s, const agit::GeneratorSpec& spec) {
  const std::int64_t w64 = spec.scaled(64), w128 = spec.scaled(128), w256 = spec.scaled(256);
  std::vector<std::vector<std::int64_t>> shapes;
  auto repeat = [&](std::vector<std::int64_t> d, int times) {
    for (int t = 0; t < times; ++t) shapes.push_back(d);
  };
  shapes.push_back({1, 3, s + 6, s + 6});
  repeat({1, w64, s, s}, 3);
  repeat({1, w128, s / 2, s / 2}, 3);
  repeat({1, w256, s / 4, s / 4}, 3);
  repeat({1, w256, s / 4, s / 4}, 6);
  repeat({1, w128, s / 2, s / 2}, 3);
  repeat({1, w64, s, s}, 3);
  shapes.push_back({1, w64, s + 6, s + 6});
  shapes.push_back({1, 4, s, s});
  return shapes;
}

void check_trunk_shapes(std::int64_t s, double channel_scale) {
  const auto spec = agit::GeneratorSpec::standard(channel_scale, true);
  agit::Generator<float> gen(spec);
  const auto expected = expected_trunk_shapes(s, spec);
  require(gen.trunk().size() == expected.size(),
          fmt("trunk has %zu layers, hand derivation lists %zu", gen.trunk().size(), expected.size()));

  Tensor<float> cur({1, 3, s, s});
  for (std::size_t i = 0; i < expected.size(); ++i) {
    cur = gen.trunk()[i].forward(cur, false);
    require(cur.dims() == expected[i],
            fmt("layer %zu at %lldpx: shape %s, hand derivation %s", i, static_cast<long long>(s),
                Tensor<float>::dims_to_string(cur.dims()).c_str(),
                Tensor<float>::dims_to_string(expected[i]).c_str()));
  }
}

std::int64_t layer_parameters(agit::nn::Layer<float>& layer) {
  std::vector<agit::nn::ParamRef<float>> params;
  std::vector<agit::nn::BufferRef<float>> buffers;
  layer.collect("", params, buffers);
  return agit::nn::count_parameters(params);
}

// Closed-form total for the published layer string: a 7x7 stem, two stride-2
// halvings, six residual blocks, two stride-2 doublings, and a 7x7 head,
// with batch norm (scale and shift) after every non-head convolution.
std::int64_t hand_generator_parameters(const agit::GeneratorSpec& spec) {
  const std::int64_t w64 = spec.scaled(64), w128 = spec.scaled(128), w256 = spec.scaled(256);
  const auto conv = [](std::int64_t in, std::int64_t out, std::int64_t k) { return out * in * k * k + out; };
  std::int64_t total = 0;
  total += conv(3, w64, 7) + 2 * w64;
  total += conv(w64, w128, 3) + 2 * w128;
  total += conv(w128, w256, 3) + 2 * w256;
  total += 6 * 2 * (conv(w256, w256, 3) + 2 * w256);
  total += conv(w256, w128, 3) + 2 * w128;
  total += conv(w128, w64, 3) + 2 * w64;
  total += conv(w64, 4, 7);
  return total;
}

std::string criterion_10() {
  check_trunk_shapes(64, 0.5);
  check_trunk_shapes(256, 1.0);

  agit::nn::Conv2d<float> head(3, 4, 7, 1, 0);
  require(layer_parameters(head) == 3 * 4 * 7 * 7 + 4,
          fmt("7x7 convolution, 3 in, 4 out: %lld parameters, hand count 592",
              static_cast<long long>(layer_parameters(head))));

  agit::nn::Conv2d<float> content_head(3, 3, 7, 1, 0);
  require(layer_parameters(content_head) == 3 * 3 * 7 * 7 + 3,
          fmt("7x7 convolution, 3 in, 3 out: %lld parameters, hand count 444",
              static_cast<long long>(layer_parameters(content_head))));

  for (const double cs : {0.5, 1.0}) {
    const auto spec = agit::GeneratorSpec::standard(cs, true);
    agit::Generator<float> gen(spec);
    const auto want = hand_generator_parameters(spec);
    require(gen.count_parameters() == want,
            fmt("generator at scale %.2f: %lld parameters, hand count %lld", cs,
                static_cast<long long>(gen.count_parameters()), static_cast<long long>(want)));
  }

  return "feature maps match hand-derived shapes at 64 and 256 px; convolution and generator totals match hand counts";
}

using Criterion = std::string (*)();

struct Entry {
  int number;
  const char* label;
  Criterion run;
};

const Entry kCriteria[] = {
    {1, "fusion algebra", criterion_1},
    {2, "gradient suite", criterion_2},
    {3, "total variation oracle", criterion_3},
    {4, "curriculum and objective arithmetic", criterion_4},
    {5, "replay buffer", criterion_5},
    {6, "determinism and resume", criterion_6},
    {7, "synthetic training progress", criterion_7},
    {8, "metric hand cases", criterion_8},
    {9, "ablation wiring", criterion_9},
    {10, "architecture conformance", criterion_10},
};

int run_one(const Entry& entry) {
  try {
    const auto note = entry.run();
    std::printf("criterion %d (%s): PASS - %s\n", entry.number, entry.label, note.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::printf("criterion %d (%s): FAIL - %s\n", entry.number, entry.label, e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  int wanted = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      wanted = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }

  int failures = 0;
  bool matched = false;
  for (const auto& entry : kCriteria) {
    if (wanted != 0 && entry.number != wanted) continue;
    matched = true;
    failures += run_one(entry);
  }
  if (!matched) {
    std::fprintf(stderr, "no such criterion: %d\n", wanted);
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
