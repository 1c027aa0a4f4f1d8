#pragma once

#include <string>

#include "stvad/tensor.hpp"

namespace stvad {

/// Reads a PNG or PGM image (format picked by file content, not extension),
/// converts color to single-channel luminance (ITU-R 601 weights), and maps
/// bytes linearly from [0, 255] to [-1, 1]. Result shape: (h, w, 1).
TensorF load_image(const std::string& path);

/// Writes an (h, w, 1) frame in [-1, 1] as an 8-bit grayscale image. The
/// extension chooses the container: ".png" or ".pgm". Values are quantized to
/// the nearest of 256 levels, so save -> load agrees within half a level.
void save_image(const std::string& path, const TensorF& frame);

/// Bilinear resample to (out_h, out_w) using half-pixel sample centers.
/// Identity when the size already matches.
TensorF resize_bilinear(const TensorF& src, int out_h, int out_w);

/// Quantization helpers shared by the writers.
unsigned char to_byte(float v);        // [-1,1] -> nearest of 0..255 (clamped)
float from_byte(unsigned char b);      // 0..255 -> [-1,1]

}  // namespace stvad
