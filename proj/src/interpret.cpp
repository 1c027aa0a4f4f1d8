#include "stvad/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stvad/image_io.hpp"

namespace stvad {

TensorF error_map(const TensorF& generated, const TensorF& real) {
  if (!generated.same_shape(real))
    throw std::invalid_argument("error_map: frame shapes differ");
  TensorF map = TensorF::zeros_like(generated);
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = std::abs(generated[i] - real[i]);
  return map;
}

TensorF guided_backprop_map(const TensorF& seq, const Discriminator<float>& disc) {
  DiscriminatorCache<float> cache;
  const TensorF patches = disc.forward(seq, &cache);

  // Target: the mean of the output patch activations.
  TensorF gy = TensorF::zeros_like(patches);
  const float weight = 1.0f / static_cast<float>(patches.size());
  for (std::size_t i = 0; i < gy.size(); ++i) gy[i] = weight;
  const TensorF gvol = disc.backward(cache, gy, nullptr, /*guided=*/true);

  // Collapse the temporal axis: per pixel, the strongest response over the
  // sequence.
  const int l = gvol.dim(0), h = gvol.dim(1), w = gvol.dim(2);
  TensorF map({h, w, 1});
  for (int t = 0; t < l; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float& px = map.at(y, x, 0);
        px = std::max(px, std::abs(gvol.at(t, y, x, 0)));
      }
  return map;
}

namespace {

float map_peak(const TensorF& map) {
  float peak = 0.0f;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!std::isfinite(map[i]) || map[i] < 0.0f)
      throw std::invalid_argument("heatmaps must be nonnegative and finite");
    peak = std::max(peak, map[i]);
  }
  return peak;
}

/// Max-normalizes a map into [-1, 1] pixel space (zero stays black).
TensorF map_to_frame(const TensorF& map) {
  const float peak = map_peak(map);
  TensorF frame = TensorF::zeros_like(map);
  for (std::size_t i = 0; i < map.size(); ++i)
    frame[i] = peak > 0.0f ? 2.0f * (map[i] / peak) - 1.0f : -1.0f;
  return frame;
}

}  // namespace

void save_heatmap(const TensorF& map, const std::string& path) {
  if (map.rank() != 3 || map.dim(2) != 1)
    throw std::invalid_argument("save_heatmap expects an (h, w, 1) map");
  save_image(path, map_to_frame(map));
}

TensorF montage_frame(const TensorF& real, const TensorF& generated, const TensorF& err,
                      const TensorF& grad) {
  if (!real.same_shape(generated) || !real.same_shape(err) || !real.same_shape(grad))
    throw std::invalid_argument("montage_frame: panel shapes differ");
  const int h = real.dim(0), w = real.dim(1);
  const TensorF err_frame = map_to_frame(err);
  const TensorF grad_frame = map_to_frame(grad);
  const TensorF* panels[4] = {&real, &generated, &err_frame, &grad_frame};

  TensorF out({h, 4 * w + 3, 1});
  for (int y = 0; y < h; ++y) {
    int ox = 0;
    for (int p = 0; p < 4; ++p) {
      for (int x = 0; x < w; ++x) out.at(y, ox + x, 0) = panels[p]->at(y, x, 0);
      ox += w;
      if (p < 3) out.at(y, ox++, 0) = 1.0f;  // separator column
    }
  }
  return out;
}

}  // namespace stvad
