#include "stvad/trainer.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "stvad/losses.hpp"

namespace stvad {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be a finite value >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (pretrain_steps < 0 || adversarial_steps < 0)
    throw std::invalid_argument("step counts must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("moment decays must lie in [0, 1)");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  if (plateau_patience < 1) throw std::invalid_argument("plateau_patience must be >= 1");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
}

namespace {

Adam<float> make_optimizer(const TrainConfig& cfg) {
  Adam<float> opt;
  opt.lr = static_cast<float>(cfg.learning_rate);
  opt.beta1 = static_cast<float>(cfg.beta1);
  opt.beta2 = static_cast<float>(cfg.beta2);
  return opt;
}

}  // namespace

Trainer::Trainer(Generator<float> g, Discriminator<float> d, const TrainConfig& cfg)
    : gen_(std::move(g)),
      disc_(std::move(d)),
      cfg_(cfg),
      sampler_(cfg.seed, rng_stream::kBatchSampler) {
  cfg_.validate();
  if (disc_.cfg.input_size != gen_.cfg.input_size ||
      disc_.cfg.sequence_length != 2 * gen_.cfg.half_window + 1)
    throw std::invalid_argument("generator and discriminator geometries disagree");
}

Trainer Trainer::fresh(int input_size, int base_channels, const TrainConfig& cfg) {
  GeneratorConfig gc;
  gc.input_size = input_size;
  gc.base_channels = base_channels;
  DiscriminatorConfig dc;
  dc.input_size = input_size;
  dc.sequence_length = 2 * gc.half_window + 1;
  dc.base_channels = base_channels;
  Generator<float> g(gc);
  Discriminator<float> d(dc);
  Rng gi(cfg.seed, rng_stream::kGeneratorInit);
  Rng di(cfg.seed, rng_stream::kDiscriminatorInit);
  g.init(gi);
  d.init(di);
  return Trainer(std::move(g), std::move(d), cfg);
}

std::vector<WindowIndex> Trainer::sample_batch(const std::vector<WindowIndex>& pool,
                                               Rng& rng) const {
  std::vector<WindowIndex> batch;
  batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
  const int hi = static_cast<int>(pool.size()) - 1;
  for (int i = 0; i < cfg_.batch_size; ++i)
    batch.push_back(pool[static_cast<std::size_t>(rng.uniform_int(0, hi))]);
  return batch;
}

void Trainer::emit(const LossReport& r) {
  reports_.push_back(r);
  if (on_report) on_report(r);
}

void Trainer::pretrain(const std::vector<Clip>& clips) {
  const int k = gen_.cfg.half_window;
  const auto pool = make_windows(clips, k);
  if (pool.empty()) throw std::invalid_argument("no trainable windows in the dataset");

  Adam<float> opt = make_optimizer(cfg_);
  auto params = gen_.params();
  opt.attach(params);

  // Plateau detection runs against one fixed batch drawn from its own stream,
  // so the monitored quantity is comparable across evaluations.
  Rng hold(cfg_.seed, rng_stream::kHoldout);
  const auto held = sample_batch(pool, hold);

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int s = 0; s < cfg_.pretrain_steps; ++s) {
    const auto batch = sample_batch(pool, sampler_);
    Generator<float> grad(gen_.cfg);  // zero parameter mirror; backward accumulates
    double pix_sum = 0;
    for (const auto& w : batch) {
      const auto window = context_window(clips[static_cast<std::size_t>(w.clip)], w.t, k);
      GeneratorCache<float> cache;
      const TensorF out = gen_.forward(window, &cache);
      const TensorF& real = clips[static_cast<std::size_t>(w.clip)].frames[static_cast<std::size_t>(w.t)];
      pix_sum += pixel_loss(out, real);
      const TensorF gy = pixel_loss_backward(out, real);
      gen_.backward(cache, gy, &grad);
    }
    if (!std::isfinite(pix_sum))
      throw DivergenceError("pixel loss became non-finite at step " +
                            std::to_string(global_step_ + 1));
    auto gparams = grad.params();
    opt.step(params, gparams);
    ++global_step_;

    LossReport r;
    r.step = global_step_;
    r.l_pixel = pix_sum;
    r.loss_g = pix_sum;
    emit(r);

    if ((s + 1) % cfg_.eval_every == 0) {
      double held_loss = 0;
      for (const auto& w : held) {
        const auto window = context_window(clips[static_cast<std::size_t>(w.clip)], w.t, k);
        held_loss += pixel_loss(gen_.forward(window),
                                clips[static_cast<std::size_t>(w.clip)].frames[static_cast<std::size_t>(w.t)]);
      }
      if (held_loss < best) {
        best = held_loss;
        stale = 0;
      } else if (++stale >= cfg_.plateau_patience) {
        break;
      }
    }
  }
}

void Trainer::adversarial(const std::vector<Clip>& clips) {
  const int k = gen_.cfg.half_window;
  const auto pool = make_windows(clips, k);
  if (pool.empty()) throw std::invalid_argument("no trainable windows in the dataset");

  // Each phase gets fresh optimizer state.
  Adam<float> opt_g = make_optimizer(cfg_);
  Adam<float> opt_d = make_optimizer(cfg_);
  auto params_g = gen_.params();
  auto params_d = disc_.params();
  opt_g.attach(params_g);
  opt_d.attach(params_d);

  int last_snapshot = -1;
  for (int s = 0; s < cfg_.adversarial_steps; ++s) {
    const auto batch = sample_batch(pool, sampler_);

    // Generator outputs for this batch. The discriminator step below leaves
    // the generator untouched, so one forward pass (with caches) serves both
    // halves of the alternation.
    std::vector<std::vector<TensorF>> windows(batch.size());
    std::vector<GeneratorCache<float>> caches(batch.size());
    std::vector<TensorF> outs(batch.size()), fakes(batch.size()), reals(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& w = batch[i];
      const Clip& clip = clips[static_cast<std::size_t>(w.clip)];
      windows[i] = context_window(clip, w.t, k);
      outs[i] = gen_.forward(windows[i], &caches[i]);
      fakes[i] = assemble_fake_sequence(windows[i], outs[i]);
      reals[i] = real_sequence(clip, w.t, k);
    }

    // Discriminator step: push fake sequences toward 0, real ones toward 1.
    double loss_d = 0;
    {
      Discriminator<float> dgrad(disc_.cfg);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        DiscriminatorCache<float> fc, rc;
        const TensorF fmap = disc_.forward(fakes[i], &fc);
        const TensorF rmap = disc_.forward(reals[i], &rc);
        loss_d += discriminator_loss_term(fmap, rmap);
        disc_.backward(fc, fake_rejection_backward(fmap), &dgrad);
        disc_.backward(rc, real_acceptance_backward(rmap), &dgrad);
      }
      if (!std::isfinite(loss_d))
        throw DivergenceError("discriminator loss became non-finite at step " +
                              std::to_string(global_step_ + 1));
      auto gd = dgrad.params();
      opt_d.step(params_d, gd);
    }

    // Generator step against the just-updated discriminator: realism term
    // needs a fresh forward pass through D, pixel term reuses the outputs.
    double l_real_sum = 0, l_pixel_sum = 0;
    {
      Generator<float> ggrad(gen_.cfg);
      const float lam = static_cast<float>(cfg_.lambda);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& w = batch[i];
        const TensorF& real = clips[static_cast<std::size_t>(w.clip)].frames[static_cast<std::size_t>(w.t)];
        DiscriminatorCache<float> fc;
        const TensorF fmap = disc_.forward(fakes[i], &fc);
        l_real_sum += realism_loss(fmap);
        l_pixel_sum += pixel_loss(outs[i], real);

        const TensorF gmap = realism_loss_backward(fmap);
        const TensorF gvol = disc_.backward(fc, gmap, nullptr);
        // Only the center slot of the fake sequence depends on the generator.
        TensorF gy = slice_time(gvol, k);
        const TensorF gpix = pixel_loss_backward(outs[i], real);
        float* gp = gy.data();
        const float* xp = gpix.data();
        for (std::size_t j = 0; j < gy.size(); ++j) gp[j] += lam * xp[j];
        gen_.backward(caches[i], gy, &ggrad);
      }
      const double loss_g = l_real_sum + cfg_.lambda * l_pixel_sum;
      if (!std::isfinite(loss_g))
        throw DivergenceError("generator loss became non-finite at step " +
                              std::to_string(global_step_ + 1));
      auto gg = ggrad.params();
      opt_g.step(params_g, gg);
    }

    ++global_step_;
    LossReport r;
    r.step = global_step_;
    r.l_real = l_real_sum;
    r.l_pixel = l_pixel_sum;
    r.loss_g = l_real_sum + cfg_.lambda * l_pixel_sum;
    r.loss_d = loss_d;
    emit(r);

    if (cfg_.checkpoint_every > 0 && (s + 1) % cfg_.checkpoint_every == 0) {
      last_snapshot = global_step_;
      if (on_checkpoint) on_checkpoint(global_step_);
    }
  }
  if (cfg_.adversarial_steps > 0 && last_snapshot != global_step_ && on_checkpoint)
    on_checkpoint(global_step_);
}

}  // namespace stvad
