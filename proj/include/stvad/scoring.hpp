#pragma once

#include <string>
#include <vector>

#include "stvad/clip.hpp"
#include "stvad/csv.hpp"
#include "stvad/models.hpp"

namespace stvad {

/// Which evidence feeds the per-frame abnormality loss: the reconstruction
/// error, the discriminator's doubt, or their calibrated combination.
enum class ScoreMode { combined, generator_only, discriminator_only };

/// Per-frame scoring record for one clip. All vectors are clip-length:
/// boundary frames (the first/last half-window) carry the nearest interior
/// frame's values so every labeled frame has a score.
struct ScoreSeries {
  std::string clip_id;
  std::vector<double> abnormality;  // combined loss before normalization
  std::vector<double> score;        // min-max normalized to [0, 1]
  std::vector<double> pixel_term;   // ||G(window) - X_t||_2
  std::vector<double> disc_term;    // -mean_patches log D(S_t), >= 0
  double lambda_s = 0;              // weight used on the discriminator term
};

/// Combined per-frame loss: pixel_term - lambda_s * (mean log D), where the
/// discriminator evidence arrives as disc_term = -mean log D.
inline double abnormality_loss(double pixel_term, double disc_term, double lambda_s) {
  return pixel_term + lambda_s * disc_term;
}

/// Full form, running both networks on one window position.
double abnormality_loss(const std::vector<TensorF>& window, const TensorF& center,
                        const TensorF& seq, const Generator<float>& gen,
                        const Discriminator<float>& disc, double lambda_s);

/// Weight on the discriminator term: the two terms' maximum-value ratio
/// divided by ten, computed over one clip. An all-zero discriminator series
/// degenerates to zero (the pixel term then stands alone).
double calibrate_lambda_s(const std::vector<double>& pixel_terms,
                          const std::vector<double>& disc_terms);

/// Min-max normalization to [0, 1]; a constant series maps to all zeros.
std::vector<double> normalize_scores(const std::vector<double>& losses);

/// Scores every frame of a clip: computes both evidence terms per interior
/// frame, calibrates lambda_s on this clip, broadcasts boundary frames, and
/// normalizes per clip. Throws if the clip is shorter than one full sequence
/// (2 * half_window + 1 frames).
ScoreSeries score_clip(const Clip& clip, const Generator<float>& gen,
                       const Discriminator<float>& disc,
                       ScoreMode mode = ScoreMode::combined);

/// Scores a clip collection. With global_norm the min-max range is taken over
/// all clips at once instead of per clip.
std::vector<ScoreSeries> score_dataset(const std::vector<Clip>& clips,
                                       const Generator<float>& gen,
                                       const Discriminator<float>& disc,
                                       ScoreMode mode = ScoreMode::combined,
                                       bool global_norm = false);

/// Flattens series into `clip_id,frame_index,score,pixel_term,disc_term,lambda_s` rows.
std::vector<ScoreRow> to_score_rows(const std::vector<ScoreSeries>& series);

}  // namespace stvad
