#include <cmath>
#include <vector>

#include "doctest.h"
#include "stvad/gradcheck.hpp"
#include "stvad/models.hpp"

using namespace stvad;

namespace {

TensorD rand_frame(int size, Rng& rng) {
  TensorD f({size, size, 1});
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.uniform(-1, 1);
  return f;
}

std::vector<TensorD> rand_window(int size, int count, Rng& rng) {
  std::vector<TensorD> w;
  for (int i = 0; i < count; ++i) w.push_back(rand_frame(size, rng));
  return w;
}

double dot(const TensorD& a, const TensorD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

GeneratorConfig small_gen_config() {
  GeneratorConfig c;
  c.input_size = 16;
  c.base_channels = 1;
  return c;
}

DiscriminatorConfig small_disc_config() {
  DiscriminatorConfig c;
  c.input_size = 16;
  c.base_channels = 1;
  return c;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("generator layer table matches the canonical architecture") {
  Generator<float> g(GeneratorConfig{});
  auto rows = g.describe();
  REQUIRE(rows.size() == 12);
  CHECK(rows[0].first == "Input");
  CHECK(rows[0].second == "224x224x1");
  CHECK(rows[1].second == "112x112x16");   // Conv1
  CHECK(rows[2].second == "56x56x32");     // Conv2
  CHECK(rows[3].second == "28x28x64");     // Conv3
  CHECK(rows[4].second == "28x28x128");    // Conv4
  CHECK(rows[5].first == "Forward ConvLSTM");
  CHECK(rows[5].second == "28x28x64");
  CHECK(rows[6].second == "28x28x64");     // Backward ConvLSTM
  CHECK(rows[7].second == "28x28x128");    // Combined ConvLSTM
  CHECK(rows[8].second == "28x28x64");     // DeConv1
  CHECK(rows[9].second == "56x56x32");     // DeConv2
  CHECK(rows[10].second == "112x112x16");  // DeConv3
  CHECK(rows[11].second == "224x224x1");   // DeConv4
}

TEST_CASE("discriminator layer table matches the canonical architecture") {
  Discriminator<float> d(DiscriminatorConfig{});
  auto rows = d.describe();
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].second == "7x112x112x32");
  CHECK(rows[1].second == "5x56x56x64");
  CHECK(rows[2].second == "3x28x28x128");
  CHECK(rows[3].second == "1x14x14x256");
  CHECK(rows[4].second == "1x7x7x512");
  CHECK(rows[5].second == "1x7x7x1");
  CHECK(d.cfg.patch_grid() == 7);
}

TEST_CASE("parameter counts are frozen for the canonical configs") {
  // counted by hand from kernel sizes, channel widths, and biases
  Generator<float> g(GeneratorConfig{});
  CHECK(g.param_count() == 2276481);
  Discriminator<float> d(DiscriminatorConfig{});
  CHECK(d.param_count() == 2448769);
  // pure function of config: a second instance agrees
  Generator<float> g2(GeneratorConfig{});
  CHECK(g2.param_count() == g.param_count());
}

TEST_CASE("desk-scale forward shapes") {
  GeneratorConfig gc;
  gc.input_size = 64;
  gc.base_channels = 4;
  Generator<float> g(gc);
  Rng rng(7, 1);
  g.init(rng);
  Rng dr(7, 2);
  std::vector<TensorF> window;
  for (int i = 0; i < 10; ++i) {
    TensorF f({64, 64, 1});
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = float(dr.uniform(-1, 1));
    window.push_back(f);
  }
  TensorF out = g.forward(window);
  REQUIRE(out.rank() == 3);
  CHECK(out.dim(0) == 64);
  CHECK(out.dim(1) == 64);
  CHECK(out.dim(2) == 1);

  DiscriminatorConfig dc;
  dc.input_size = 64;
  dc.base_channels = 4;
  Discriminator<float> d(dc);
  d.init(rng);
  CHECK(dc.patch_grid() == 2);
  window.push_back(window.back());  // 11 frames
  TensorF seq = stack_frames(window);
  TensorF y = d.forward(seq);
  REQUIRE(y.rank() == 4);
  CHECK(y.dim(0) == 1);
  CHECK(y.dim(1) == 2);
  CHECK(y.dim(2) == 2);
  CHECK(y.dim(3) == 1);
}

TEST_CASE("generator output stays inside the tanh range") {
  GeneratorConfig c = small_gen_config();
  Generator<double> g(c);
  Rng rng(17, 1);
  g.init(rng);
  Rng dr(17, 2);
  auto window = rand_window(16, 10, dr);
  TensorD out = g.forward(window);
  CHECK(out.all_finite());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] <= 1.0);
    CHECK(out[i] >= -1.0);
  }
}

TEST_CASE("zero decoder output layer produces exactly tanh(0)") {
  GeneratorConfig c = small_gen_config();
  Generator<double> g(c);
  Rng rng(19, 1);
  g.init(rng);
  g.dec4.w.set_zero();
  g.dec4.b.set_zero();
  Rng dr(19, 2);
  auto window = rand_window(16, 10, dr);
  TensorD out = g.forward(window);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("discriminator output is a probability map") {
  DiscriminatorConfig c = small_disc_config();
  Discriminator<double> d(c);
  Rng rng(23, 1);
  d.init(rng);
  Rng dr(23, 2);
  auto frames = rand_window(16, 11, dr);
  TensorD y = d.forward(stack_frames(frames));
  CHECK(y.all_finite());
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(y[i] > 0.0);
    CHECK(y[i] < 1.0);
  }

  d.c6.w.set_zero();
  d.c6.b.set_zero();
  TensorD half = d.forward(stack_frames(frames));
  for (std::size_t i = 0; i < half.size(); ++i) CHECK(half[i] == 0.5);
}

TEST_CASE("window and sequence length validation") {
  Generator<double> g(small_gen_config());
  Rng dr(29, 2);
  auto window = rand_window(16, 9, dr);
  CHECK_THROWS(g.forward(window));
  window.push_back(rand_frame(8, dr));  // wrong size
  CHECK_THROWS(g.forward(window));

  Discriminator<double> d(small_disc_config());
  auto frames = rand_window(16, 10, dr);
  CHECK_THROWS(d.forward(stack_frames(frames)));

  GeneratorConfig bad;
  bad.input_size = 20;  // not a multiple of 8
  CHECK_THROWS(Generator<double>(bad));
}

TEST_CASE("fake sequence places the generated frame in the center slot") {
  Rng dr(31, 2);
  auto window = rand_window(8, 10, dr);
  TensorD gen = rand_frame(8, dr);
  TensorD fake = assemble_fake_sequence(window, gen);
  REQUIRE(fake.dim(0) == 11);
  // positions 0-4 and 6-10 bit-identical to the window, center = generated
  for (int t = 0; t < 11; ++t) {
    const TensorD& want = t < 5 ? window[t] : (t == 5 ? gen : window[t - 1]);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) CHECK(fake.at(t, y, x, 0) == want.at(y, x, 0));
  }
  // real center frame reproduces the real sequence exactly
  std::vector<TensorD> real_frames(window.begin(), window.begin() + 5);
  real_frames.push_back(gen);
  real_frames.insert(real_frames.end(), window.begin() + 5, window.end());
  TensorD real = stack_frames(real_frames);
  for (std::size_t i = 0; i < real.size(); ++i) CHECK(real[i] == fake[i]);
}

TEST_CASE("generator backward matches finite differences on sampled tensors") {
  GeneratorConfig c = small_gen_config();
  Generator<double> g(c);
  Rng rng(37, 1);
  g.init(rng);
  Rng dr(37, 2);
  auto window = rand_window(16, 10, dr);
  TensorD r = rand_frame(16, dr);

  GeneratorCache<double> cache;
  g.forward(window, &cache);
  Generator<double> grad(c);
  std::vector<TensorD> gframes;
  g.backward(cache, r, &grad, &gframes);

  auto check_param = [&](const TensorD& analytic, TensorD& live, double tol) {
    auto loss = [&](const TensorD& probe) {
      TensorD saved = live;
      live = probe;
      double v = dot(g.forward(window), r);
      live = saved;
      return v;
    };
    CHECK(max_rel_diff(analytic, fd_gradient(loss, live, 1e-5)) < tol);
  };

  // representative tensors from every stage of the pipeline
  check_param(grad.dec4.w, g.dec4.w, 1e-7);
  check_param(grad.dec1.b, g.dec1.b, 1e-7);
  check_param(grad.lstm_comb.b, g.lstm_comb.b, 1e-7);
  check_param(grad.lstm_fwd.b, g.lstm_fwd.b, 1e-7);
  check_param(grad.lstm_bwd.b, g.lstm_bwd.b, 1e-7);
  check_param(grad.enc1.w, g.enc1.w, 1e-7);
  check_param(grad.enc4.b, g.enc4.b, 1e-7);

  // input gradient: both a past and a future frame
  for (int idx : {1, 8}) {
    auto loss = [&](const TensorD& probe) {
      auto w2 = window;
      w2[idx] = probe;
      return dot(g.forward(w2), r);
    };
    CHECK(max_rel_diff(gframes[idx], fd_gradient(loss, window[idx], 1e-5)) < 1e-7);
  }
}

TEST_CASE("discriminator backward matches finite differences on sampled tensors") {
  DiscriminatorConfig c = small_disc_config();
  Discriminator<double> d(c);
  Rng rng(41, 1);
  d.init(rng);
  Rng dr(41, 2);
  TensorD seq = stack_frames(rand_window(16, 11, dr));
  TensorD r({1, 1, 1, 1});
  r[0] = 1.0;

  DiscriminatorCache<double> cache;
  TensorD y = d.forward(seq, &cache);
  TensorD rr = TensorD::zeros_like(y);
  for (std::size_t i = 0; i < rr.size(); ++i) rr[i] = dr.uniform(-1, 1);

  Discriminator<double> grad(c);
  TensorD gx = d.backward(cache, rr, &grad);

  auto check_param = [&](const TensorD& analytic, TensorD& live, double tol) {
    auto loss = [&](const TensorD& probe) {
      TensorD saved = live;
      live = probe;
      double v = dot(d.forward(seq), rr);
      live = saved;
      return v;
    };
    CHECK(max_rel_diff(analytic, fd_gradient(loss, live, 1e-5)) < tol);
  };
  check_param(grad.c6.w, d.c6.w, 1e-7);
  check_param(grad.c6.b, d.c6.b, 1e-7);
  check_param(grad.c1.b, d.c1.b, 1e-7);
  check_param(grad.c3.b, d.c3.b, 1e-7);

  auto loss_x = [&](const TensorD& probe) { return dot(d.forward(probe), rr); };
  CHECK(max_rel_diff(gx, fd_gradient(loss_x, seq, 1e-5)) < 1e-7);
}

TEST_CASE("initialization and forward are deterministic under a fixed seed") {
  GeneratorConfig c = small_gen_config();
  Generator<double> a(c), b(c);
  Rng r1(55, 1), r2(55, 1);
  a.init(r1);
  b.init(r2);
  Rng dr(55, 2);
  auto window = rand_window(16, 10, dr);
  TensorD ya = a.forward(window);
  TensorD yb = b.forward(window);
  for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya[i] == yb[i]);
}

}  // TEST_SUITE
