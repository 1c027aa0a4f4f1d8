#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "stvad/image_io.hpp"
#include "stvad/interpret.hpp"
#include "stvad/losses.hpp"
#include "stvad/rng.hpp"
#include "stvad/synth.hpp"

using namespace stvad;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "stvad_interpret_tests";
  fs::create_directories(dir);
  return dir;
}

TensorF random_frame(int n, std::uint64_t seed) {
  Rng rng(seed);
  TensorF f({n, n, 1});
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<float>(rng.uniform(-1, 1));
  return f;
}

Discriminator<float> desk_discriminator(bool initialized) {
  DiscriminatorConfig dc;
  dc.input_size = 16;
  dc.base_channels = 1;
  Discriminator<float> d(dc);
  if (initialized) {
    Rng rng(9, rng_stream::kDiscriminatorInit);
    d.init(rng);
  }
  return d;
}

}  // namespace

TEST_SUITE("interpret") {

TEST_CASE("error map is the absolute per-pixel difference") {
  const auto a = random_frame(8, 1);
  const auto zero_map = error_map(a, a);
  for (std::size_t i = 0; i < zero_map.size(); ++i) CHECK(zero_map[i] == 0.0f);

  auto b = a;
  b.at(3, 5, 0) -= 0.8f;
  const auto one_hot = error_map(b, a);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      CHECK(one_hot.at(y, x, 0) == doctest::Approx(y == 3 && x == 5 ? 0.8 : 0.0));

  TensorF wrong({4, 4, 1});
  CHECK_THROWS_AS((void)error_map(a, wrong), std::invalid_argument);

  // Exact bridge to the scalar loss: sum of squared map entries equals the
  // squared euclidean distance.
  const auto c = random_frame(8, 2);
  const auto m = error_map(a, c);
  double sum_sq = 0;
  for (std::size_t i = 0; i < m.size(); ++i) sum_sq += double(m[i]) * double(m[i]);
  const double norm = pixel_loss(a, c);
  CHECK(sum_sq == doctest::Approx(norm * norm).epsilon(1e-5));
}

TEST_CASE("error map lights up a synthetic blob against empty background") {
  // A zero generator output against a frame whose only content is one blob:
  // the map inside the blob must dwarf the (exactly zero) background.
  SynthSpec spec;
  spec.seed = 33;
  spec.image_size = 16;
  spec.train_clips = 1;
  spec.test_clips = 1;
  spec.frames_per_clip = 5;
  spec.blob_count = 1;
  spec.blob_radius = 2.5;
  const auto clip = synth_generate(spec).test[0];
  const TensorF blank({16, 16, 1});
  const auto m = error_map(blank, clip.frames[0]);
  double inside = 0, outside = 0;
  int n_in = 0, n_out = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      if (clip.frames[0].at(y, x, 0) > 0.05f) {
        inside += m.at(y, x, 0);
        ++n_in;
      } else {
        outside += m.at(y, x, 0);
        ++n_out;
      }
  REQUIRE(n_in > 0);
  CHECK(inside / n_in >= 2.0 * (outside / std::max(1, n_out) + 1e-9));
}

TEST_CASE("guided gradient map properties") {
  TensorF seq({11, 16, 16, 1});
  Rng rng(4);
  for (std::size_t i = 0; i < seq.size(); ++i) seq[i] = static_cast<float>(rng.uniform(-1, 1));

  // Zero-parameter discriminator: zero gradient everywhere.
  const auto flat = guided_backprop_map(seq, desk_discriminator(false));
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat[i] == 0.0f);

  // Initialized network: nonnegative, finite, deterministic, right shape.
  const auto disc = desk_discriminator(true);
  const auto map = guided_backprop_map(seq, disc);
  REQUIRE(map.rank() == 3);
  CHECK(map.dim(0) == 16);
  CHECK(map.dim(1) == 16);
  CHECK(map.dim(2) == 1);
  float total = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    CHECK(map[i] >= 0.0f);
    CHECK(std::isfinite(map[i]));
    total += map[i];
  }
  CHECK(total > 0.0f);
  const auto again = guided_backprop_map(seq, disc);
  CHECK(std::memcmp(map.data(), again.data(), map.size() * sizeof(float)) == 0);
}

TEST_CASE("heatmap files are max-normalized 8-bit images") {
  const auto dir = temp_dir();

  TensorF zero({8, 8, 1});
  const auto black_path = (dir / "black.pgm").string();
  save_heatmap(zero, black_path);
  const auto black = load_image(black_path);
  for (std::size_t i = 0; i < black.size(); ++i) CHECK(black[i] == doctest::Approx(-1.0));

  TensorF spike({8, 8, 1});
  spike.at(2, 6, 0) = 0.37f;  // arbitrary positive peak
  const auto spike_path = (dir / "spike.png").string();
  save_heatmap(spike, spike_path);
  const auto loaded = load_image(spike_path);
  CHECK(loaded.at(2, 6, 0) == doctest::Approx(1.0));  // peak maps to 255
  CHECK(loaded.at(0, 0, 0) == doctest::Approx(-1.0));

  // Round trip: reloaded values match the normalized map within one level.
  TensorF map({8, 8, 1});
  Rng rng(6);
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<float>(rng.uniform(0, 3));
  const auto rt_path = (dir / "rt.png").string();
  save_heatmap(map, rt_path);
  const auto back = load_image(rt_path);
  float peak = 0;
  for (std::size_t i = 0; i < map.size(); ++i) peak = std::max(peak, map[i]);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float normalized = map[i] / peak;           // intended [0, 1] value
    const float recovered = (back[i] + 1.0f) / 2.0f;  // byte decoded back to [0, 1]
    CHECK(std::abs(recovered - normalized) <= 1.0f / 255.0f + 1e-6f);
  }

  TensorF negative({4, 4, 1});
  negative.at(0, 0, 0) = -0.5f;
  CHECK_THROWS_AS(save_heatmap(negative, (dir / "bad.png").string()), std::invalid_argument);
}

TEST_CASE("montage stitches the four panels with separators") {
  const int n = 8;
  TensorF real({n, n, 1}), gen({n, n, 1}), err({n, n, 1}), grad({n, n, 1});
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      real.at(y, x, 0) = -0.5f;
      gen.at(y, x, 0) = 0.5f;
      err.at(y, x, 0) = 1.0f;   // constant map -> normalizes to full white
      grad.at(y, x, 0) = 0.0f;  // zero map -> black panel
    }
  const auto m = montage_frame(real, gen, err, grad);
  REQUIRE(m.dim(0) == n);
  REQUIRE(m.dim(1) == 4 * n + 3);
  CHECK(m.at(4, 2, 0) == doctest::Approx(-0.5));             // panel 1: real
  CHECK(m.at(4, n, 0) == doctest::Approx(1.0));              // separator
  CHECK(m.at(4, n + 1 + 2, 0) == doctest::Approx(0.5));      // panel 2: generated
  CHECK(m.at(4, 2 * (n + 1) + 2, 0) == doctest::Approx(1.0));  // panel 3: error map
  CHECK(m.at(4, 3 * (n + 1) + 2, 0) == doctest::Approx(-1.0)); // panel 4: gradient map

  TensorF wrong({4, 4, 1});
  CHECK_THROWS_AS((void)montage_frame(real, gen, err, wrong), std::invalid_argument);
}

}  // TEST_SUITE
