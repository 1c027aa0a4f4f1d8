#pragma once

#include <string>

#include "stvad/models.hpp"

namespace stvad {

// Parameters are stored as <stem>.json (manifest: model kind, config, tensor
// names/shapes/offsets) plus <stem>.bin (raw little-endian float32 blob).
// Save followed by load reproduces every parameter bit-exactly.

void save_generator(const std::string& stem, Generator<float>& g);
Generator<float> load_generator(const std::string& stem);

void save_discriminator(const std::string& stem, Discriminator<float>& d);
Discriminator<float> load_discriminator(const std::string& stem);

}  // namespace stvad
