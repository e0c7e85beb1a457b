#include "agit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "agit/errors.hpp"
#include "agit/losses.hpp"
#include "agit/rng.hpp"

namespace agit {

namespace {

const TrainConfig& checked(const TrainConfig& cfg) {
  validate(cfg);
  return cfg;
}

Tensor<float> flip_lr(const Tensor<float>& t) {
  Tensor<float> out(t.dims());
  for (std::int64_t n = 0; n < t.batch(); ++n) {
    for (std::int64_t c = 0; c < t.channels(); ++c) {
      for (std::int64_t h = 0; h < t.height(); ++h) {
        for (std::int64_t w = 0; w < t.width(); ++w) out.at(n, c, h, w) = t.at(n, c, h, t.width() - 1 - w);
      }
    }
  }
  return out;
}

void accumulate(LossReport& sum, const LossReport& r) {
  sum.gan_xy += r.gan_xy;
  sum.gan_yx += r.gan_yx;
  sum.agan_xy += r.agan_xy;
  sum.agan_yx += r.agan_yx;
  sum.cycle += r.cycle;
  sum.pixel += r.pixel;
  sum.tv_x += r.tv_x;
  sum.tv_y += r.tv_y;
  sum.total += r.total;
}

LossReport divided(LossReport sum, std::int64_t n) {
  const double s = 1.0 / static_cast<double>(n);
  sum.gan_xy *= s;
  sum.gan_yx *= s;
  sum.agan_xy *= s;
  sum.agan_yx *= s;
  sum.cycle *= s;
  sum.pixel *= s;
  sum.tv_x *= s;
  sum.tv_y *= s;
  sum.total *= s;
  return sum;
}

}  // namespace

Models::Models(const TrainConfig& cfg)
    : g_xy(GeneratorSpec::standard(cfg.channel_scale, cfg.use_attention_generator)),
      g_yx(GeneratorSpec::standard(cfg.channel_scale, cfg.use_attention_generator)),
      d_x(DiscriminatorSpec::standard(cfg.channel_scale, 3, cfg.first_block_norm)),
      d_y(DiscriminatorSpec::standard(cfg.channel_scale, 3, cfg.first_block_norm)) {
  if (cfg.use_attention_discriminators) {
    if (!cfg.use_attention_generator) {
      throw ContractError("attended critics need the attention generator enabled");
    }
    d_xa.emplace(DiscriminatorSpec::standard(cfg.channel_scale, 4, cfg.first_block_norm));
    d_ya.emplace(DiscriminatorSpec::standard(cfg.channel_scale, 4, cfg.first_block_norm));
  }
}

void Models::init(std::uint64_t seed) {
  const auto with_stream = [seed](const char* purpose, auto& net) {
    Rng rng(stream_seed(seed, purpose));
    net.init_params(rng);
  };
  with_stream("init_g_xy", g_xy);
  with_stream("init_g_yx", g_yx);
  with_stream("init_d_x", d_x);
  with_stream("init_d_y", d_y);
  if (d_xa) with_stream("init_d_xa", *d_xa);
  if (d_ya) with_stream("init_d_ya", *d_ya);
}

std::vector<nn::ParamRef<float>> Models::generator_params() {
  std::vector<nn::ParamRef<float>> params;
  std::vector<nn::BufferRef<float>> buffers;
  g_xy.collect("g_xy.", params, buffers);
  g_yx.collect("g_yx.", params, buffers);
  return params;
}

std::vector<nn::ParamRef<float>> Models::discriminator_params() {
  std::vector<nn::ParamRef<float>> params;
  std::vector<nn::BufferRef<float>> buffers;
  d_x.collect("d_x.", params, buffers);
  d_y.collect("d_y.", params, buffers);
  if (d_xa) d_xa->collect("d_xa.", params, buffers);
  if (d_ya) d_ya->collect("d_ya.", params, buffers);
  return params;
}

void Models::collect_all(std::vector<nn::ParamRef<float>>& params, std::vector<nn::BufferRef<float>>& buffers) {
  g_xy.collect("g_xy.", params, buffers);
  g_yx.collect("g_yx.", params, buffers);
  d_x.collect("d_x.", params, buffers);
  d_y.collect("d_y.", params, buffers);
  if (d_xa) d_xa->collect("d_xa.", params, buffers);
  if (d_ya) d_ya->collect("d_ya.", params, buffers);
}

double curriculum_r(const TrainConfig& cfg, int epoch) {
  return epoch < cfg.warm_epochs ? cfg.r_warm : cfg.r_main;
}

double learning_rate(const TrainConfig& cfg, int epoch) {
  if (epoch < cfg.decay_start_epoch) return cfg.lr;
  if (epoch >= cfg.epochs) return 0.0;
  return cfg.lr * static_cast<double>(cfg.epochs - epoch) / static_cast<double>(cfg.epochs - cfg.decay_start_epoch);
}

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(checked(cfg)),
      models_(cfg_),
      opt_g_(cfg_.adam_beta1, cfg_.adam_beta2),
      opt_d_(cfg_.adam_beta1, cfg_.adam_beta2),
      pool_x_(cfg_.buffer_size, stream_seed(cfg_.seed, "pool_x", 0), cfg_.pool_swap_prob),
      pool_y_(cfg_.buffer_size, stream_seed(cfg_.seed, "pool_y", 0), cfg_.pool_swap_prob) {
  models_.init(cfg_.seed);
  gen_params_ = models_.generator_params();
  disc_params_ = models_.discriminator_params();
}

LossReport Trainer::train_step(const Tensor<float>& x, const Tensor<float>& y) {
  validate_image_batch(x, "domain X batch");
  validate_image_batch(y, "domain Y batch");
  if (x.batch() != y.batch()) throw DimensionError("train step: batch axis differs between domains");

  const double r = curriculum_r(cfg_, epoch_);
  const double lr = learning_rate(cfg_, epoch_);
  const double w_cyc = r * cfg_.lambda_cycle;
  const double w_pix = r * cfg_.lambda_pixel;
  const double w_adv = (1.0 - r) * cfg_.lambda_gan;
  const double w_tv = (1.0 - r) * cfg_.lambda_tv;
  const bool adv_grad = w_adv > 0.0;
  const bool has_mask = cfg_.use_attention_generator;
  const bool has_att = models_.d_ya.has_value();
  const auto form = cfg_.gan_loss_form;

  nn::zero_grads(gen_params_);
  nn::zero_grads(disc_params_);

  // Generator update. Four generator passes: each direction once on real
  // input, once on the other direction's fake for the cycle term.
  auto heads_x = models_.g_xy.forward(x, true);  // mask/content drawn from x
  Tensor<float> fake_y = has_mask ? fuse(x, heads_x.attention, heads_x.content) : heads_x.content;
  auto heads_y = models_.g_yx.forward(y, true);
  Tensor<float> fake_x = has_mask ? fuse(y, heads_y.attention, heads_y.content) : heads_y.content;
  auto heads_cx = models_.g_yx.forward(fake_y, true);
  Tensor<float> cyc_x = has_mask ? fuse(fake_y, heads_cx.attention, heads_cx.content) : heads_cx.content;
  auto heads_cy = models_.g_xy.forward(fake_x, true);
  Tensor<float> cyc_y = has_mask ? fuse(fake_x, heads_cy.attention, heads_cy.content) : heads_cy.content;

  LossReport report;
  report.cycle = cycle_loss(x, cyc_x, y, cyc_y);
  report.pixel = pixel_loss(x, fake_y, y, fake_x);
  if (has_mask) {
    report.tv_x = tv_loss(heads_x.attention);
    report.tv_y = tv_loss(heads_y.attention);
  }

  // Critic scores on the fresh fakes. With a zero adversarial weight the
  // passes run in inference mode: values still feed the report, but no
  // gradient state or norm statistics are touched.
  Tensor<float> s_fy = discriminate(models_.d_y, fake_y, adv_grad);
  Tensor<float> s_fx = discriminate(models_.d_x, fake_x, adv_grad);
  report.gan_xy = adversarial_loss_g(s_fy, form);
  report.gan_yx = adversarial_loss_g(s_fx, form);
  Tensor<float> s_afy, s_afx;
  if (has_att) {
    s_afy = discriminate_attended(*models_.d_ya, heads_x.attention, fake_y, adv_grad);
    s_afx = discriminate_attended(*models_.d_xa, heads_y.attention, fake_x, adv_grad);
    report.agan_xy = adversarial_loss_g(s_afy, form);
    report.agan_yx = adversarial_loss_g(s_afx, form);
  }
  report.total = full_objective(report, cfg_, r);

  // Backward. Cycle chains first: they consume the second forward pass of
  // each generator and contribute gradient on the fakes.
  Tensor<float> d_cy = l1_mean_backward(cyc_y, y);
  d_cy.scale(static_cast<float>(w_cyc));
  Tensor<float> d_fx_total;  // accumulates every consumer's gradient on fake_x
  if (has_mask) {
    auto fg = fuse_backward(d_cy, fake_x, heads_cy.attention, heads_cy.content);
    d_fx_total = std::move(fg.d_x);
    d_fx_total.add(models_.g_xy.backward(fg.d_content, fg.d_mask));
  } else {
    d_fx_total = models_.g_xy.backward(d_cy, Tensor<float>());
  }

  Tensor<float> d_cx = l1_mean_backward(cyc_x, x);
  d_cx.scale(static_cast<float>(w_cyc));
  Tensor<float> d_fy_total;
  if (has_mask) {
    auto fg = fuse_backward(d_cx, fake_y, heads_cx.attention, heads_cx.content);
    d_fy_total = std::move(fg.d_x);
    d_fy_total.add(models_.g_yx.backward(fg.d_content, fg.d_mask));
  } else {
    d_fy_total = models_.g_yx.backward(d_cx, Tensor<float>());
  }

  Tensor<float> d_mask_ag_x, d_mask_ag_y;  // attended-critic gradient on the masks
  if (adv_grad) {
    Tensor<float> ds = adversarial_loss_g_backward(s_fy, form);
    ds.scale(static_cast<float>(w_adv));
    d_fy_total.add(models_.d_y.backward(ds));
    ds = adversarial_loss_g_backward(s_fx, form);
    ds.scale(static_cast<float>(w_adv));
    d_fx_total.add(models_.d_x.backward(ds));
    if (has_att) {
      ds = adversarial_loss_g_backward(s_afy, form);
      ds.scale(static_cast<float>(w_adv));
      auto [dm_y, di_y] = split_channels(models_.d_ya->backward(ds), 1);
      d_mask_ag_x = std::move(dm_y);
      d_fy_total.add(di_y);
      ds = adversarial_loss_g_backward(s_afx, form);
      ds.scale(static_cast<float>(w_adv));
      auto [dm_x, di_x] = split_channels(models_.d_xa->backward(ds), 1);
      d_mask_ag_y = std::move(dm_x);
      d_fx_total.add(di_x);
    }
  }
  if (w_pix != 0.0) {
    Tensor<float> dp = l1_mean_backward(fake_y, x);
    dp.scale(static_cast<float>(w_pix));
    d_fy_total.add(dp);
    dp = l1_mean_backward(fake_x, y);
    dp.scale(static_cast<float>(w_pix));
    d_fx_total.add(dp);
  }

  // First passes: fold the fake gradients back through the blend, add the
  // mask-only terms, and finish each generator.
  if (has_mask) {
    auto fg = fuse_backward(d_fy_total, x, heads_x.attention, heads_x.content);
    Tensor<float> d_mask = std::move(fg.d_mask);
    if (!d_mask_ag_x.empty()) d_mask.add(d_mask_ag_x);
    if (w_tv != 0.0) {
      Tensor<float> dtv = tv_loss_backward(heads_x.attention);
      dtv.scale(static_cast<float>(w_tv));
      d_mask.add(dtv);
    }
    models_.g_xy.backward(fg.d_content, d_mask);

    fg = fuse_backward(d_fx_total, y, heads_y.attention, heads_y.content);
    d_mask = std::move(fg.d_mask);
    if (!d_mask_ag_y.empty()) d_mask.add(d_mask_ag_y);
    if (w_tv != 0.0) {
      Tensor<float> dtv = tv_loss_backward(heads_y.attention);
      dtv.scale(static_cast<float>(w_tv));
      d_mask.add(dtv);
    }
    models_.g_yx.backward(fg.d_content, d_mask);
  } else {
    models_.g_xy.backward(d_fy_total, Tensor<float>());
    models_.g_yx.backward(d_fx_total, Tensor<float>());
  }
  opt_g_.step(gen_params_, lr);

  // Critic update on replayed fakes; half the adversarial weight. A zero
  // adversarial coefficient means there is nothing to optimize, so the
  // critics are left completely untouched.
  double d_weighted = 0.0;
  last_d_raw_ = 0.0;
  if (cfg_.lambda_gan > 0.0) {
    nn::zero_grads(disc_params_);  // drops gradient spill from the generator step
    const double w_d = 0.5 * cfg_.lambda_gan;

    std::vector<Tensor<float>> hist_y, hist_x;
    if (has_mask) {
      hist_y = pool_y_.query({heads_x.attention, fake_y});
      hist_x = pool_x_.query({heads_y.attention, fake_x});
    } else {
      hist_y = pool_y_.query(std::vector<Tensor<float>>{fake_y});
      hist_x = pool_x_.query(std::vector<Tensor<float>>{fake_x});
    }
    const Tensor<float>& hist_fake_y = hist_y.back();
    const Tensor<float>& hist_fake_x = hist_x.back();

    const auto critic_update = [&](Discriminator<float>& d, const Tensor<float>& real, const Tensor<float>& fake) {
      auto s_real = discriminate(d, real, true);
      auto s_fake = discriminate(d, fake, true);
      const double raw = adversarial_loss_d(s_real, s_fake, form);
      auto [g_real, g_fake] = adversarial_loss_d_backward(s_real, s_fake, form);
      g_real.scale(static_cast<float>(w_d));
      g_fake.scale(static_cast<float>(w_d));
      d.backward(g_fake);  // fake pass was the most recent
      d.backward(g_real);
      return raw;
    };
    const auto critic_update_attended = [&](Discriminator<float>& d, const Tensor<float>& real_mask,
                                            const Tensor<float>& real, const Tensor<float>& fake_mask,
                                            const Tensor<float>& fake) {
      auto s_real = discriminate_attended(d, real_mask, real, true);
      auto s_fake = discriminate_attended(d, fake_mask, fake, true);
      const double raw = adversarial_loss_d(s_real, s_fake, form);
      auto [g_real, g_fake] = adversarial_loss_d_backward(s_real, s_fake, form);
      g_real.scale(static_cast<float>(w_d));
      g_fake.scale(static_cast<float>(w_d));
      d.backward(g_fake);
      d.backward(g_real);
      return raw;
    };

    last_d_raw_ += critic_update(models_.d_y, y, hist_fake_y);
    last_d_raw_ += critic_update(models_.d_x, x, hist_fake_x);
    if (has_att) {
      // Real pairs borrow the freshly generated mask as a constant; fake
      // pairs come out of the pool with the mask they were made with.
      last_d_raw_ += critic_update_attended(*models_.d_ya, heads_x.attention, y, hist_y[0], hist_fake_y);
      last_d_raw_ += critic_update_attended(*models_.d_xa, heads_y.attention, x, hist_x[0], hist_fake_x);
    }
    if (!std::isfinite(last_d_raw_)) throw NumericError("critic adversarial loss is not finite");
    d_weighted = w_d * last_d_raw_;
    opt_d_.step(disc_params_, lr);
  }

  last_d_weighted_ = d_weighted;
  d_trace_.push_back(d_weighted);
  step_trace_.push_back(report);
  ++step_;
  return report;
}

LossReport Trainer::run_epoch(const UnpairedDataset& a, const UnpairedDataset& b) {
  const auto e = static_cast<std::uint64_t>(epoch_);
  pool_x_.reset(stream_seed(cfg_.seed, "pool_x", e));
  pool_y_.reset(stream_seed(cfg_.seed, "pool_y", e));
  Rng order_rng(stream_seed(cfg_.seed, "order", e));
  Rng flip_rng(stream_seed(cfg_.seed, "flip", e));

  std::vector<std::int64_t> order_a(static_cast<std::size_t>(a.size()));
  std::vector<std::int64_t> order_b(static_cast<std::size_t>(b.size()));
  std::iota(order_a.begin(), order_a.end(), 0);
  std::iota(order_b.begin(), order_b.end(), 0);
  shuffle(order_a, order_rng);
  shuffle(order_b, order_rng);

  const std::int64_t s = cfg_.image_size;
  const std::int64_t n_major = std::max(a.size(), b.size());
  const auto bs = static_cast<std::int64_t>(std::max(1, cfg_.batch_size));

  LossReport sum;
  std::int64_t steps = 0;
  for (std::int64_t pos = 0; pos < n_major; pos += bs) {
    const std::int64_t cur = std::min(bs, n_major - pos);
    Tensor<float> bx({cur, 3, s, s});
    Tensor<float> by({cur, 3, s, s});
    for (std::int64_t j = 0; j < cur; ++j) {
      auto sa = slice_sample(a.images, order_a[static_cast<std::size_t>((pos + j) % a.size())]);
      auto sb = slice_sample(b.images, order_b[static_cast<std::size_t>((pos + j) % b.size())]);
      if (cfg_.flip_augment) {
        if (flip_rng.bernoulli(0.5)) sa = flip_lr(sa);
        if (flip_rng.bernoulli(0.5)) sb = flip_lr(sb);
      }
      set_sample(bx, j, sa);
      set_sample(by, j, sb);
    }
    accumulate(sum, train_step(bx, by));
    ++steps;
  }
  ++epoch_;
  return divided(sum, steps);
}

std::vector<LossReport> Trainer::train(const UnpairedDataset& a, const UnpairedDataset& b,
                                       const std::filesystem::path& checkpoint_dir, int until_epoch) {
  if (a.size() == 0 || b.size() == 0) throw ContractError("training needs images in both domains");
  for (const auto* ds : {&a, &b}) {
    if (ds->images.height() != cfg_.image_size || ds->images.width() != cfg_.image_size) {
      throw DimensionError("dataset image size " + std::to_string(ds->images.height()) +
                           " does not match configured size " + std::to_string(cfg_.image_size));
    }
  }
  if (!checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(checkpoint_dir, ec);
    if (!std::filesystem::is_directory(checkpoint_dir)) {
      throw IoError("cannot create checkpoint directory", checkpoint_dir.string());
    }
  }

  std::vector<LossReport> means;
  while (epoch_ < cfg_.epochs && (until_epoch < 0 || epoch_ < until_epoch)) {
    means.push_back(run_epoch(a, b));
    if (!checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "ckpt_epoch_%04d.ckpt", epoch_);
      save(checkpoint_dir / name);
      save(checkpoint_dir / "latest.ckpt");
    }
  }
  return means;
}

Checkpoint Trainer::snapshot() {
  Checkpoint ck;
  ck.epoch = epoch_;
  ck.step = step_;
  ck.opt_g_steps = opt_g_.step_count();
  ck.opt_d_steps = opt_d_.step_count();
  ck.config = cfg_;

  std::vector<nn::ParamRef<float>> params;
  std::vector<nn::BufferRef<float>> buffers;
  models_.collect_all(params, buffers);
  for (const auto& p : params) ck.tensors.emplace_back(p.name, p.param->value);
  for (const auto& b : buffers) ck.tensors.emplace_back(b.name, *b.value);
  for (const auto& [name, slot] : opt_g_.slots()) {
    ck.tensors.emplace_back("opt_g.m." + name, slot.m);
    ck.tensors.emplace_back("opt_g.v." + name, slot.v);
  }
  for (const auto& [name, slot] : opt_d_.slots()) {
    ck.tensors.emplace_back("opt_d.m." + name, slot.m);
    ck.tensors.emplace_back("opt_d.v." + name, slot.v);
  }
  return ck;
}

void Trainer::save(const std::filesystem::path& path) { save_checkpoint(path, snapshot()); }

void Trainer::restore(const Checkpoint& ck) {
  std::vector<nn::ParamRef<float>> params;
  std::vector<nn::BufferRef<float>> buffers;
  models_.collect_all(params, buffers);

  std::map<std::string, const Tensor<float>*> available;
  for (const auto& [name, t] : ck.tensors) available[name] = &t;

  std::vector<std::string> diff;
  const auto check = [&](const std::string& name, const std::vector<std::int64_t>& want) -> const Tensor<float>* {
    const auto it = available.find(name);
    if (it == available.end()) {
      diff.push_back("missing from checkpoint: " + name);
      return nullptr;
    }
    const Tensor<float>* t = it->second;
    available.erase(it);
    if (t->dims() != want) {
      diff.push_back(name + ": checkpoint " + Tensor<float>::dims_to_string(t->dims()) + " vs model " +
                     Tensor<float>::dims_to_string(want));
      return nullptr;
    }
    return t;
  };

  std::vector<std::pair<Tensor<float>*, const Tensor<float>*>> writes;
  for (const auto& p : params) {
    if (const auto* t = check(p.name, p.param->value.dims())) writes.emplace_back(&p.param->value, t);
  }
  for (const auto& b : buffers) {
    if (const auto* t = check(b.name, b.value->dims())) writes.emplace_back(b.value, t);
  }

  struct SlotWrite {
    nn::Adam<float>* opt;
    std::string name;
    const Tensor<float>* m;
    const Tensor<float>* v;
  };
  std::vector<SlotWrite> slot_writes;
  const auto gather_opt = [&](nn::Adam<float>& opt, const char* tag, const std::vector<nn::ParamRef<float>>& plist) {
    for (const auto& p : plist) {
      const auto m_name = std::string(tag) + ".m." + p.name;
      const auto v_name = std::string(tag) + ".v." + p.name;
      const bool has_m = available.count(m_name) > 0;
      const bool has_v = available.count(v_name) > 0;
      if (!has_m && !has_v) continue;  // no moments recorded yet for this parameter
      const auto* m = has_m ? check(m_name, p.param->value.dims()) : nullptr;
      const auto* v = has_v ? check(v_name, p.param->value.dims()) : nullptr;
      if ((has_m != has_v) || (has_m && m == nullptr) || (has_v && v == nullptr)) {
        if (has_m != has_v) diff.push_back("incomplete optimizer moments for " + p.name);
        continue;
      }
      slot_writes.push_back({&opt, p.name, m, v});
    }
  };
  gather_opt(opt_g_, "opt_g", gen_params_);
  gather_opt(opt_d_, "opt_d", disc_params_);

  for (const auto& [name, t] : available) {
    (void)t;
    diff.push_back("unexpected tensor in checkpoint: " + name);
  }

  if (!diff.empty()) {
    std::string msg = "checkpoint does not fit this model:";
    const std::size_t shown = std::min<std::size_t>(diff.size(), 12);
    for (std::size_t i = 0; i < shown; ++i) msg += "\n  " + diff[i];
    if (diff.size() > shown) msg += "\n  (and " + std::to_string(diff.size() - shown) + " more)";
    throw ContractError(msg);
  }

  for (auto& [dst, src] : writes) *dst = *src;
  opt_g_.slots().clear();
  opt_d_.slots().clear();
  for (auto& sw : slot_writes) {
    auto& slot = sw.opt->slots()[sw.name];
    slot.m = *sw.m;
    slot.v = *sw.v;
  }
  opt_g_.set_step_count(ck.opt_g_steps);
  opt_d_.set_step_count(ck.opt_d_steps);
  epoch_ = ck.epoch;
  step_ = ck.step;
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint_path) {
  const auto ck = load_checkpoint(checkpoint_path);
  Trainer t(ck.config);
  t.restore(ck);
  return t;
}

}  // namespace agit
