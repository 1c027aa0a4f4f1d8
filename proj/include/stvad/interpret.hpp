#pragma once

#include <string>
#include <vector>

#include "stvad/models.hpp"
#include "stvad/tensor.hpp"

namespace stvad {

/// Where the generator disagrees with reality: per-pixel |generated - real|.
/// Shapes must match; result is (h, w, 1), nonnegative.
TensorF error_map(const TensorF& generated, const TensorF& real);

/// Where the discriminator looks when judging a sequence: gradient of the
/// mean patch activation with respect to the input, with the guided rule
/// (negative upstream gradients zeroed at every internal nonlinearity; the
/// output sigmoid stays ungated). The (11, h, w, 1) gradient volume reduces
/// to one (h, w, 1) map by per-pixel max of magnitude over the time slices.
TensorF guided_backprop_map(const TensorF& seq, const Discriminator<float>& disc);

/// Writes a nonnegative map as an 8-bit grayscale image (.png or .pgm),
/// scaled so the maximum lands on 255. An all-zero map writes as all black.
void save_heatmap(const TensorF& map, const std::string& path);

/// Side-by-side panel in the order real | generated | error | gradient with
/// one-pixel white separators. Frames arrive in [-1, 1]; maps are
/// max-normalized. Result is an (h, 4w + 3, 1) frame in [-1, 1] ready for
/// save_image.
TensorF montage_frame(const TensorF& real, const TensorF& generated, const TensorF& err,
                      const TensorF& grad);

}  // namespace stvad
