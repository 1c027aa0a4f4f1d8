#pragma once

#include <string>
#include <vector>

#include "stvad/clip.hpp"

namespace stvad {

/// Loads one clip from a directory of PNG/PGM frames. Files are taken in
/// lexicographic order (use zero-padded numeric names), converted to
/// luminance, resized to target_size x target_size, and mapped to [-1, 1].
/// The clip id is the directory's base name. Throws on an empty directory or
/// an unreadable frame.
Clip load_clip(const std::string& dir, int target_size);

/// Loads a dataset rooted at `root`: every subdirectory containing frames
/// becomes a clip (sorted by name); if `root` itself holds frames and no clip
/// subdirectories, it loads as a single clip. A `labels.csv` next to the
/// clips attaches per-frame labels; rows naming unknown clips or frames out
/// of range are an error.
std::vector<Clip> load_dataset(const std::string& root, int target_size);

}  // namespace stvad
