#include "stvad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "stvad/image_io.hpp"
#include "stvad/rng.hpp"

namespace stvad {

namespace fs = std::filesystem;

void SynthSpec::validate() const {
  if (image_size < 16) throw std::invalid_argument("image_size must be >= 16");
  if (train_clips < 0 || test_clips < 0 || train_clips + test_clips < 1)
    throw std::invalid_argument("need at least one clip");
  if (frames_per_clip < 1) throw std::invalid_argument("frames_per_clip must be >= 1");
  if (blob_count < 1) throw std::invalid_argument("blob_count must be >= 1");
  if (!(blob_radius > 0)) throw std::invalid_argument("blob_radius must be positive");
  // Radius jitter goes up to 1.2x; a blob must fit between the borders.
  if (2.0 * blob_radius * 1.2 >= image_size - 2)
    throw std::invalid_argument("blob larger than image");
  if (!(speed_min >= 0) || !(speed_max >= speed_min) || !(speed_max > 0))
    throw std::invalid_argument("need 0 <= speed_min <= speed_max with speed_max > 0");
  for (const auto& a : anomalies) {
    if (a.clip < 0 || a.clip >= test_clips)
      throw std::invalid_argument("anomaly clip index outside the test split");
    if (a.start < 0 || a.end < a.start || a.end >= frames_per_clip)
      throw std::invalid_argument("anomaly interval outside clip bounds");
    if (a.type != "fast_mover" && a.type != "reverse_direction" && a.type != "shape_change")
      throw std::invalid_argument("unknown anomaly type: " + a.type);
  }
}

namespace {

struct Blob {
  double x = 0, y = 0, vx = 0, vy = 0;
  double r = 1, a = 0.5;
  bool square = false;
};

Blob draw_blob(Rng& rng, const SynthSpec& spec, double speed_lo, double speed_hi) {
  Blob b;
  b.a = rng.uniform(0.45, 0.85);
  b.r = spec.blob_radius * rng.uniform(0.8, 1.2);
  b.x = rng.uniform(b.r + 1.0, spec.image_size - 2.0 - b.r);
  b.y = rng.uniform(b.r + 1.0, spec.image_size - 2.0 - b.r);
  const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  const double speed = rng.uniform(speed_lo, speed_hi);
  b.vx = speed * std::cos(angle);
  b.vy = speed * std::sin(angle);
  return b;
}

void advance(Blob& b, int size) {
  b.x += b.vx;
  b.y += b.vy;
  if (b.x - b.r < 0.0 && b.vx < 0.0) b.vx = -b.vx;
  if (b.x + b.r > size - 1.0 && b.vx > 0.0) b.vx = -b.vx;
  if (b.y - b.r < 0.0 && b.vy < 0.0) b.vy = -b.vy;
  if (b.y + b.r > size - 1.0 && b.vy > 0.0) b.vy = -b.vy;
}

void render(TensorF& frame, const Blob& b) {
  const int size = frame.dim(0);
  // Soft-edged shape: full intensity inside, one-pixel linear falloff.
  const int x0 = std::max(0, static_cast<int>(std::floor(b.x - b.r - 2)));
  const int x1 = std::min(size - 1, static_cast<int>(std::ceil(b.x + b.r + 2)));
  const int y0 = std::max(0, static_cast<int>(std::floor(b.y - b.r - 2)));
  const int y1 = std::min(size - 1, static_cast<int>(std::ceil(b.y + b.r + 2)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - b.x, dy = y - b.y;
      const double d = b.square ? std::max(std::abs(dx), std::abs(dy))
                                : std::sqrt(dx * dx + dy * dy);
      const double v = b.a * std::clamp(b.r - d + 0.5, 0.0, 1.0);
      if (v > 0.0) {
        float& px = frame.at(y, x, 0);
        px = static_cast<float>(std::min(1.0, px + v));
      }
    }
}

Clip render_clip(const SynthSpec& spec, const std::string& id, int stream_index,
                 const std::vector<AnomalyEvent>& events) {
  Rng rng(spec.seed, (rng_stream::kSynthesis << 16) + static_cast<std::uint64_t>(stream_index));

  std::vector<Blob> blobs;
  for (int i = 0; i < spec.blob_count; ++i)
    blobs.push_back(draw_blob(rng, spec, spec.speed_min, spec.speed_max));
  // Anomaly actors draw after the normal cast, in event order, so a clip's
  // normal dynamics do not depend on which anomalies are scripted.
  std::vector<Blob> intruders;
  for (const auto& e : events)
    if (e.type == "fast_mover") {
      Blob fast = draw_blob(rng, spec, 3.0 * spec.speed_max, 4.0 * spec.speed_max);
      fast.a = 0.9;
      intruders.push_back(fast);
    } else {
      intruders.emplace_back();  // placeholder keeps indices aligned
    }

  Clip clip;
  clip.id = id;
  clip.source = ClipSource::synthetic;
  clip.labels.assign(static_cast<std::size_t>(spec.frames_per_clip), 0);

  for (int t = 0; t < spec.frames_per_clip; ++t) {
    for (std::size_t ei = 0; ei < events.size(); ++ei) {
      const auto& e = events[ei];
      if (e.type == "reverse_direction") {
        // Flip the lead blob's velocity for the advances inside the interval.
        if (t == e.start || t == e.end + 1) {
          blobs[0].vx = -blobs[0].vx;
          blobs[0].vy = -blobs[0].vy;
        }
      } else if (e.type == "shape_change") {
        blobs[0].square = t >= e.start && t <= e.end;
      }
      if (t >= e.start && t <= e.end) clip.labels[static_cast<std::size_t>(t)] = 1;
    }

    TensorF frame({spec.image_size, spec.image_size, 1});
    for (const auto& b : blobs) render(frame, b);
    for (std::size_t ei = 0; ei < events.size(); ++ei)
      if (events[ei].type == "fast_mover" && t >= events[ei].start && t <= events[ei].end)
        render(frame, intruders[ei]);
    clip.frames.push_back(std::move(frame));

    for (auto& b : blobs) advance(b, spec.image_size);
    for (std::size_t ei = 0; ei < events.size(); ++ei)
      if (events[ei].type == "fast_mover" && t >= events[ei].start && t < events[ei].end)
        advance(intruders[ei], spec.image_size);
  }
  return clip;
}

std::string clip_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
  return buf;
}

}  // namespace

SynthCorpus synth_generate(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus corpus;
  const std::vector<AnomalyEvent> none;
  for (int i = 0; i < spec.train_clips; ++i)
    corpus.train.push_back(render_clip(spec, clip_name("train", i), i, none));
  for (int j = 0; j < spec.test_clips; ++j) {
    std::vector<AnomalyEvent> mine;
    for (const auto& a : spec.anomalies)
      if (a.clip == j) mine.push_back(a);
    corpus.test.push_back(
        render_clip(spec, clip_name("test", j), spec.train_clips + j, mine));
    for (const auto& a : mine)
      corpus.events.push_back({corpus.test.back().id, a.start, a.end});
  }
  for (const auto& c : corpus.train) c.validate();
  for (const auto& c : corpus.test) c.validate();
  return corpus;
}

void synth_write(const SynthCorpus& corpus, const std::string& out_dir) {
  const fs::path root(out_dir);
  auto write_split = [&](const std::vector<Clip>& clips, const char* split) {
    for (const auto& clip : clips) {
      const fs::path dir = root / split / clip.id;
      fs::create_directories(dir);
      for (int t = 0; t < clip.length(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%06d.pgm", t);
        save_image((dir / name).string(), clip.frames[static_cast<std::size_t>(t)]);
      }
    }
  };
  write_split(corpus.train, "train");
  write_split(corpus.test, "test");

  std::vector<LabelRow> labels;
  for (const auto& clip : corpus.test)
    for (int t = 0; t < clip.length(); ++t)
      labels.push_back({clip.id, t, clip.labels[static_cast<std::size_t>(t)]});
  fs::create_directories(root / "test");
  write_labels_csv((root / "test" / "labels.csv").string(), labels);
  write_events_csv((root / "test" / "events.csv").string(), corpus.events);
}

}  // namespace stvad
