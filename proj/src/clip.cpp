#include "stvad/clip.hpp"

#include <stdexcept>

#include "stvad/models.hpp"

namespace stvad {

void Clip::validate() const {
  if (frames.empty()) throw std::invalid_argument("clip '" + id + "' has no frames");
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front()))
      throw std::invalid_argument("clip '" + id + "' has inconsistent frame shapes");
  }
  if (!labels.empty() && labels.size() != frames.size())
    throw std::invalid_argument("clip '" + id + "' labels do not align with frames");
}

std::vector<int> window_centers(const Clip& clip, int k) {
  std::vector<int> out;
  for (int t = k; t + k < clip.length(); ++t) out.push_back(t);
  return out;
}

std::vector<WindowIndex> make_windows(const std::vector<Clip>& clips, int k) {
  std::vector<WindowIndex> out;
  for (int c = 0; c < static_cast<int>(clips.size()); ++c)
    for (int t : window_centers(clips[c], k)) out.push_back({c, t});
  return out;
}

std::vector<TensorF> context_window(const Clip& clip, int t, int k) {
  if (t - k < 0 || t + k >= clip.length())
    throw std::out_of_range("window at t=" + std::to_string(t) + " exceeds clip bounds");
  std::vector<TensorF> w;
  w.reserve(2 * k);
  for (int i = t - k; i < t; ++i) w.push_back(clip.frames[i]);
  for (int i = t + 1; i <= t + k; ++i) w.push_back(clip.frames[i]);
  return w;
}

TensorF real_sequence(const Clip& clip, int t, int k) {
  if (t - k < 0 || t + k >= clip.length())
    throw std::out_of_range("sequence at t=" + std::to_string(t) + " exceeds clip bounds");
  std::vector<TensorF> frames(clip.frames.begin() + (t - k), clip.frames.begin() + (t + k + 1));
  return stack_frames(frames);
}

}  // namespace stvad
