#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stvad/clip.hpp"
#include "stvad/csv.hpp"

namespace stvad {

/// One labeled abnormal interval injected into a test clip.
struct AnomalyEvent {
  int clip = 0;       // index into the test portion of the corpus
  std::string type;   // "fast_mover" | "reverse_direction" | "shape_change"
  int start = 0;      // inclusive frame bounds
  int end = 0;
};

/// Recipe for a deterministic desk-scale corpus: soft-disk blobs drifting at
/// constant velocity and bouncing off the borders, with scripted anomalies in
/// the test clips only.
struct SynthSpec {
  std::uint64_t seed = 7;
  int image_size = 64;
  int train_clips = 4;
  int test_clips = 2;
  int frames_per_clip = 120;
  int blob_count = 3;
  double blob_radius = 5.0;
  double speed_min = 0.6;  // per-frame displacement range for normal blobs
  double speed_max = 1.4;
  std::vector<AnomalyEvent> anomalies;

  void validate() const;
};

struct SynthCorpus {
  std::vector<Clip> train;   // normal dynamics only; labels all zero
  std::vector<Clip> test;    // per-frame labels mark the anomaly intervals
  std::vector<EventRow> events;  // the same intervals as ground-truth rows
};

/// Renders the corpus. Identical specs give bit-identical pixel data; each
/// clip draws from its own seed-derived stream, so clips are independent.
SynthCorpus synth_generate(const SynthSpec& spec);

/// Writes `train/<id>/frame_*.pgm`, `test/<id>/frame_*.pgm`, plus
/// `test/labels.csv` and `test/events.csv` under out_dir.
void synth_write(const SynthCorpus& corpus, const std::string& out_dir);

}  // namespace stvad
