#include "stvad/gradsuite.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

#include "stvad/gradcheck.hpp"
#include "stvad/losses.hpp"
#include "stvad/models.hpp"
#include "stvad/nn.hpp"
#include "stvad/rng.hpp"
#include "stvad/tensor.hpp"

namespace stvad {
namespace {

using TensorD = Tensor<double>;

TensorD rand_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0,
                    double hi = 1.0) {
  TensorD t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double dot(const TensorD& a, const TensorD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Central differences of `loss` with respect to every coordinate of `target`,
/// perturbing the live tensor in place and restoring it afterwards.
template <typename F>
TensorD fd_over(F&& loss, TensorD& target, double eps) {
  TensorD g = TensorD::zeros_like(target);
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double orig = target[i];
    target[i] = orig + eps;
    const double up = loss();
    target[i] = orig - eps;
    const double dn = loss();
    target[i] = orig;
    g[i] = (up - dn) / (2 * eps);
  }
  return g;
}

double check_conv2d(Rng& rng) {
  TensorD x = rand_tensor({7, 9, 3}, rng);
  Conv2dParams<double> p(3, 3, 3, 4, 2, 2);
  glorot_init(p, rng);
  for (std::size_t i = 0; i < p.b.size(); ++i) p.b[i] = rng.uniform(-0.2, 0.2);
  const TensorD r = rand_tensor({4, 5, 4}, rng);

  Conv2dParams<double> grad(3, 3, 3, 4, 2, 2);
  const TensorD gx = conv2d_backward(x, p, r, &grad);

  const double eps = 1e-5;
  double worst = max_rel_diff(gx, fd_over([&] { return dot(conv2d(x, p), r); }, x, eps));
  worst = std::max(worst,
                   max_rel_diff(grad.w, fd_over([&] { return dot(conv2d(x, p), r); }, p.w, eps)));
  worst = std::max(worst,
                   max_rel_diff(grad.b, fd_over([&] { return dot(conv2d(x, p), r); }, p.b, eps)));
  return worst;
}

double check_deconv2d(Rng& rng) {
  TensorD x = rand_tensor({4, 4, 2}, rng);
  Conv2dParams<double> p(5, 5, 2, 3, 2, 2);
  glorot_init(p, rng);
  for (std::size_t i = 0; i < p.b.size(); ++i) p.b[i] = rng.uniform(-0.2, 0.2);
  const TensorD r = rand_tensor({8, 8, 3}, rng);

  Conv2dParams<double> grad(5, 5, 2, 3, 2, 2);
  const TensorD gx = deconv2d_backward(x, p, r, &grad);

  const double eps = 1e-5;
  double worst = max_rel_diff(gx, fd_over([&] { return dot(deconv2d(x, p), r); }, x, eps));
  worst = std::max(
      worst, max_rel_diff(grad.w, fd_over([&] { return dot(deconv2d(x, p), r); }, p.w, eps)));
  worst = std::max(
      worst, max_rel_diff(grad.b, fd_over([&] { return dot(deconv2d(x, p), r); }, p.b, eps)));
  return worst;
}

double check_conv3d(Rng& rng) {
  TensorD x = rand_tensor({5, 8, 8, 2}, rng);
  Conv3dParams<double> p(3, 3, 3, 2, 3, 1, 2, 2);
  glorot_init(p, rng);
  for (std::size_t i = 0; i < p.b.size(); ++i) p.b[i] = rng.uniform(-0.2, 0.2);
  const TensorD r = rand_tensor({3, 4, 4, 3}, rng);

  Conv3dParams<double> grad(3, 3, 3, 2, 3, 1, 2, 2);
  const TensorD gx = conv3d_backward(x, p, r, &grad);

  const double eps = 1e-5;
  double worst = max_rel_diff(gx, fd_over([&] { return dot(conv3d(x, p), r); }, x, eps));
  worst = std::max(worst,
                   max_rel_diff(grad.w, fd_over([&] { return dot(conv3d(x, p), r); }, p.w, eps)));
  worst = std::max(worst,
                   max_rel_diff(grad.b, fd_over([&] { return dot(conv3d(x, p), r); }, p.b, eps)));
  return worst;
}

double check_elu(Rng& rng) {
  TensorD x = rand_tensor({6, 6, 2}, rng, -2.0, 2.0);
  const TensorD r = rand_tensor({6, 6, 2}, rng);
  const TensorD gx = elu_backward(x, r);
  return max_rel_diff(gx, fd_over([&] { return dot(elu(x), r); }, x, 1e-5));
}

double check_tanh(Rng& rng) {
  TensorD x = rand_tensor({6, 6, 2}, rng, -2.0, 2.0);
  const TensorD r = rand_tensor({6, 6, 2}, rng);
  const TensorD gx = tanh_backward_from_output(tanh_act(x), r);
  return max_rel_diff(gx, fd_over([&] { return dot(tanh_act(x), r); }, x, 1e-5));
}

double check_sigmoid(Rng& rng) {
  TensorD x = rand_tensor({6, 6, 2}, rng, -3.0, 3.0);
  const TensorD r = rand_tensor({6, 6, 2}, rng);
  const TensorD gx = sigmoid_backward_from_output(sigmoid(x), r);
  return max_rel_diff(gx, fd_over([&] { return dot(sigmoid(x), r); }, x, 1e-5));
}

double check_convlstm_step(Rng& rng) {
  const int ci = 2, ch = 3;
  ConvLstmParams<double> p(3, 3, ci, ch);
  glorot_init(p, rng);
  TensorD x = rand_tensor({4, 4, ci}, rng);
  ConvLstmState<double> prev{rand_tensor({4, 4, ch}, rng), rand_tensor({4, 4, ch}, rng)};
  const TensorD rh = rand_tensor({4, 4, ch}, rng);
  const TensorD rc = rand_tensor({4, 4, ch}, rng);

  ConvLstmStepCache<double> cache;
  convlstm_step<double>(x, prev, p, &cache);
  TensorD gx = TensorD::zeros_like(x);
  TensorD ghp = TensorD::zeros_like(prev.h);
  TensorD gcp = TensorD::zeros_like(prev.c);
  ConvLstmParams<double> grad(3, 3, ci, ch);
  convlstm_step_backward<double>(cache, p, rh, &rc, &gx, &ghp, &gcp, &grad);

  auto loss = [&] {
    const ConvLstmState<double> next = convlstm_step<double>(x, prev, p, nullptr);
    return dot(next.h, rh) + dot(next.c, rc);
  };
  const double eps = 1e-5;
  double worst = max_rel_diff(gx, fd_over(loss, x, eps));
  worst = std::max(worst, max_rel_diff(ghp, fd_over(loss, prev.h, eps)));
  worst = std::max(worst, max_rel_diff(gcp, fd_over(loss, prev.c, eps)));
  worst = std::max(worst, max_rel_diff(grad.w, fd_over(loss, p.w, eps)));
  worst = std::max(worst, max_rel_diff(grad.b, fd_over(loss, p.b, eps)));
  return worst;
}

/// Full generator objective for one window: realism term on the composed
/// sequence plus the weighted reconstruction term, differentiated with
/// respect to every generator parameter.
double check_generator_objective(int input_size, int base, std::uint64_t seed) {
  GeneratorConfig gcfg;
  gcfg.input_size = input_size;
  gcfg.base_channels = base;
  gcfg.validate();
  DiscriminatorConfig dcfg;
  dcfg.input_size = input_size;
  dcfg.base_channels = base;
  dcfg.validate();

  Generator<double> gen(gcfg);
  Discriminator<double> disc(dcfg);
  Rng grng(seed, rng_stream::kGeneratorInit);
  Rng drng(seed, rng_stream::kDiscriminatorInit);
  gen.init(grng);
  disc.init(drng);

  Rng data_rng(seed, 97);
  std::vector<TensorD> window;
  for (int i = 0; i < 2 * gcfg.half_window; ++i)
    window.push_back(rand_tensor({input_size, input_size, 1}, data_rng));
  const TensorD target = rand_tensor({input_size, input_size, 1}, data_rng);
  const double lambda = 1.0;

  auto loss = [&] {
    const TensorD y = gen.forward(window);
    const TensorD fake = assemble_fake_sequence(window, y);
    return realism_loss(disc.forward(fake)) + lambda * pixel_loss(y, target);
  };

  GeneratorCache<double> cache;
  const TensorD y = gen.forward(window, &cache);
  const TensorD fake = assemble_fake_sequence(window, y);
  DiscriminatorCache<double> dcache;
  const TensorD fmap = disc.forward(fake, &dcache);
  const TensorD gvol = disc.backward(dcache, realism_loss_backward(fmap), nullptr);

  TensorD gy({input_size, input_size, 1});
  const int k = gcfg.half_window;
  for (int yy = 0; yy < input_size; ++yy)
    for (int xx = 0; xx < input_size; ++xx) gy.at(yy, xx, 0) = gvol.at(k, yy, xx, 0);
  const TensorD gpix = pixel_loss_backward(y, target);
  for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += lambda * gpix[i];

  Generator<double> analytic(gcfg);
  analytic.zero_params();
  gen.backward(cache, gy, &analytic, nullptr);

  const double eps = 1e-5;
  double worst = 0;
  auto live = gen.params();
  auto want = analytic.params();
  for (std::size_t i = 0; i < live.size(); ++i)
    worst = std::max(worst, max_rel_diff(*want[i].tensor, fd_over(loss, *live[i].tensor, eps)));
  return worst;
}

/// Full discriminator objective for one fake/real pair, differentiated with
/// respect to every discriminator parameter.
double check_discriminator_objective(int input_size, int base, std::uint64_t seed) {
  DiscriminatorConfig dcfg;
  dcfg.input_size = input_size;
  dcfg.base_channels = base;
  dcfg.validate();

  Discriminator<double> disc(dcfg);
  Rng drng(seed, rng_stream::kDiscriminatorInit);
  disc.init(drng);

  Rng data_rng(seed, 98);
  const TensorD fake = rand_tensor({dcfg.sequence_length, input_size, input_size, 1}, data_rng);
  const TensorD real = rand_tensor({dcfg.sequence_length, input_size, input_size, 1}, data_rng);

  auto loss = [&] { return discriminator_loss_term(disc.forward(fake), disc.forward(real)); };

  DiscriminatorCache<double> fcache, rcache;
  const TensorD fmap = disc.forward(fake, &fcache);
  const TensorD rmap = disc.forward(real, &rcache);
  Discriminator<double> analytic(dcfg);
  analytic.zero_params();
  disc.backward(fcache, fake_rejection_backward(fmap), &analytic);
  disc.backward(rcache, real_acceptance_backward(rmap), &analytic);

  const double eps = 1e-5;
  double worst = 0;
  auto live = disc.params();
  auto want = analytic.params();
  for (std::size_t i = 0; i < live.size(); ++i)
    worst = std::max(worst, max_rel_diff(*want[i].tensor, fd_over(loss, *live[i].tensor, eps)));
  return worst;
}

}  // namespace

std::vector<GradCheckResult> run_gradient_battery(int input_size, int base_channels,
                                                  std::uint64_t seed) {
  const double op_tol = 1e-6;
  const double objective_tol = 1e-4;
  Rng rng(seed, 96);

  std::vector<GradCheckResult> out;
  out.push_back({"conv2d", check_conv2d(rng), op_tol});
  out.push_back({"deconv2d", check_deconv2d(rng), op_tol});
  out.push_back({"conv3d", check_conv3d(rng), op_tol});
  out.push_back({"elu", check_elu(rng), op_tol});
  out.push_back({"tanh", check_tanh(rng), op_tol});
  out.push_back({"sigmoid", check_sigmoid(rng), op_tol});
  out.push_back({"convlstm_step", check_convlstm_step(rng), op_tol});
  out.push_back({"generator_objective", check_generator_objective(input_size, base_channels, seed),
                 objective_tol});
  out.push_back({"discriminator_objective",
                 check_discriminator_objective(input_size, base_channels, seed), objective_tol});
  return out;
}

}  // namespace stvad
