#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace stvad {

/// One finite-difference verification: the worst relative error measured
/// against the tolerance it must stay under.
struct GradCheckResult {
  std::string name;
  double rel_err = 0.0;
  double tolerance = 0.0;

  bool passed() const { return std::isfinite(rel_err) && rel_err < tolerance; }
};

/// Runs the full differentiation battery in 64-bit arithmetic: every
/// differentiated op in isolation, then the complete generator and
/// discriminator objectives at the given model size. Deterministic for a
/// fixed seed. `input_size` must be a positive multiple of 8.
std::vector<GradCheckResult> run_gradient_battery(int input_size, int base_channels,
                                                  std::uint64_t seed);

}  // namespace stvad
