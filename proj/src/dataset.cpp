#include "stvad/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "stvad/csv.hpp"
#include "stvad/image_io.hpp"

namespace stvad {

namespace fs = std::filesystem;

namespace {

bool is_frame_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".png" || ext == ".pgm";
}

std::vector<fs::path> frame_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_frame_file(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

void attach_labels(std::vector<Clip>& clips, const fs::path& csv) {
  const auto rows = read_labels_csv(csv.string());
  for (auto& clip : clips) clip.labels.assign(static_cast<std::size_t>(clip.length()), 0);
  for (const auto& row : rows) {
    auto it = std::find_if(clips.begin(), clips.end(),
                           [&](const Clip& c) { return c.id == row.clip_id; });
    if (it == clips.end())
      throw std::runtime_error("labels.csv names unknown clip '" + row.clip_id + "'");
    if (row.frame_index < 0 || row.frame_index >= it->length())
      throw std::runtime_error("labels.csv frame index out of range for clip '" +
                               row.clip_id + "'");
    if (row.label != 0 && row.label != 1)
      throw std::runtime_error("labels must be 0 or 1 (clip '" + row.clip_id + "')");
    it->labels[static_cast<std::size_t>(row.frame_index)] = row.label;
  }
}

}  // namespace

Clip load_clip(const std::string& dir, int target_size) {
  if (target_size < 1) throw std::invalid_argument("target_size must be positive");
  const fs::path path(dir);
  if (!fs::is_directory(path)) throw std::runtime_error("not a directory: " + dir);
  const auto files = frame_files(path);
  if (files.empty()) throw std::runtime_error("no PNG/PGM frames in " + dir);

  Clip clip;
  clip.id = path.filename().string();
  if (clip.id.empty()) clip.id = path.parent_path().filename().string();
  clip.source = ClipSource::ingested;
  for (const auto& f : files)
    clip.frames.push_back(resize_bilinear(load_image(f.string()), target_size, target_size));
  clip.validate();
  return clip;
}

std::vector<Clip> load_dataset(const std::string& root, int target_size) {
  const fs::path path(root);
  if (!fs::is_directory(path)) throw std::runtime_error("not a directory: " + root);

  std::vector<fs::path> clip_dirs;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_directory() && !frame_files(entry.path()).empty())
      clip_dirs.push_back(entry.path());
  std::sort(clip_dirs.begin(), clip_dirs.end());

  std::vector<Clip> clips;
  if (clip_dirs.empty()) {
    clips.push_back(load_clip(root, target_size));
  } else {
    for (const auto& d : clip_dirs) clips.push_back(load_clip(d.string(), target_size));
  }

  const fs::path labels = path / "labels.csv";
  if (fs::exists(labels)) attach_labels(clips, labels);
  return clips;
}

}  // namespace stvad
