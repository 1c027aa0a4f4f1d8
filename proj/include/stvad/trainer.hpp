#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "stvad/adam.hpp"
#include "stvad/clip.hpp"
#include "stvad/models.hpp"
#include "stvad/rng.hpp"

namespace stvad {

struct TrainConfig {
  double learning_rate = 2e-4;
  int batch_size = 3;
  double lambda = 1.0;  // weight of the pixel term in the generator objective
  int pretrain_steps = 500;     // cap; held-out plateau may stop earlier
  int adversarial_steps = 2000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 7;
  int eval_every = 25;        // held-out evaluation cadence during pretrain
  int plateau_patience = 5;   // stale evaluations before pretrain stops
  int checkpoint_every = 0;   // adversarial steps between snapshots; 0 = final only

  void validate() const;
};

/// Per-step batch sums. During pretraining only the pixel column is live;
/// l_real and loss_d stay zero and loss_g mirrors l_pixel.
struct LossReport {
  int step = 0;  // one global counter across both phases
  double l_real = 0;
  double l_pixel = 0;
  double loss_g = 0;
  double loss_d = 0;
};

/// Any non-finite loss aborts the run with this error.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Trainer {
 public:
  Trainer(Generator<float> g, Discriminator<float> d, const TrainConfig& cfg);

  /// Seed-derived initialization of both networks at the given scale.
  static Trainer fresh(int input_size, int base_channels, const TrainConfig& cfg);

  /// Phase one: generator only, pixel loss only.
  void pretrain(const std::vector<Clip>& clips);
  /// Phase two: alternating discriminator and generator updates, one batch
  /// shared per alternation.
  void adversarial(const std::vector<Clip>& clips);

  const std::vector<LossReport>& reports() const { return reports_; }
  Generator<float>& generator() { return gen_; }
  Discriminator<float>& discriminator() { return disc_; }
  const TrainConfig& config() const { return cfg_; }

  /// Invoked after every logged step.
  std::function<void(const LossReport&)> on_report;
  /// Invoked when a periodic or final snapshot is due (adversarial phase).
  std::function<void(int step)> on_checkpoint;

 private:
  std::vector<WindowIndex> sample_batch(const std::vector<WindowIndex>& pool, Rng& rng) const;
  void emit(const LossReport& r);

  Generator<float> gen_;
  Discriminator<float> disc_;
  TrainConfig cfg_;
  Rng sampler_;
  std::vector<LossReport> reports_;
  int global_step_ = 0;
};

}  // namespace stvad
