#pragma once

#include <string>
#include <vector>

#include "stvad/tensor.hpp"

namespace stvad {

enum class ClipSource { ingested, synthetic };

/// An ordered sequence of same-shaped grayscale frames in [-1, 1], with
/// optional per-frame anomaly labels (0 = normal, 1 = abnormal).
struct Clip {
  std::string id;
  ClipSource source = ClipSource::ingested;
  std::vector<TensorF> frames;
  std::vector<int> labels;  // empty, or aligned 1:1 with frames

  int length() const { return static_cast<int>(frames.size()); }
  void validate() const;  // shape uniformity, label alignment
};

/// Center-frame index of one scoreable window within a clip collection.
struct WindowIndex {
  int clip = 0;
  int t = 0;
};

/// Valid center indices for one clip: t = k .. L-1-k (count max(0, L-2k)).
std::vector<int> window_centers(const Clip& clip, int k = 5);

/// All windows across a clip collection, clip-major then time-major.
std::vector<WindowIndex> make_windows(const std::vector<Clip>& clips, int k = 5);

/// The 2k context frames around t, in order (t-k..t-1, t+1..t+k).
std::vector<TensorF> context_window(const Clip& clip, int t, int k = 5);

/// The 2k+1 real frames (t-k..t+k) stacked into an (l, h, w, c) volume.
TensorF real_sequence(const Clip& clip, int t, int k = 5);

}  // namespace stvad
