#include "stvad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stvad/losses.hpp"

namespace stvad {

namespace {

/// Interior evidence terms for every scoreable center frame of one clip.
struct ClipTerms {
  std::vector<int> centers;
  std::vector<double> pixel, disc;
};

ClipTerms evidence_terms(const Clip& clip, const Generator<float>& gen,
                         const Discriminator<float>& disc) {
  const int k = gen.cfg.half_window;
  ClipTerms terms;
  terms.centers = window_centers(clip, k);
  if (terms.centers.empty())
    throw std::invalid_argument("clip '" + clip.id + "' is shorter than one full sequence (" +
                                std::to_string(2 * k + 1) + " frames)");
  for (const int t : terms.centers) {
    const auto window = context_window(clip, t, k);
    const TensorF generated = gen.forward(window);
    terms.pixel.push_back(
        static_cast<double>(pixel_loss(generated, clip.frames[static_cast<std::size_t>(t)])));
    const TensorF map = disc.forward(real_sequence(clip, t, k));
    terms.disc.push_back(static_cast<double>(neg_log_realness(map)));
  }
  return terms;
}

/// Expands interior values to clip length by copying the nearest interior
/// frame's value onto each boundary frame.
std::vector<double> broadcast_to_clip(const std::vector<double>& interior,
                                      const std::vector<int>& centers, int length) {
  std::vector<double> full(static_cast<std::size_t>(length));
  const int first = centers.front(), last = centers.back();
  for (int t = 0; t < length; ++t) {
    const int src = std::clamp(t, first, last);
    full[static_cast<std::size_t>(t)] =
        interior[static_cast<std::size_t>(src - first)];
  }
  return full;
}

ScoreSeries assemble_series(const Clip& clip, const ClipTerms& terms, ScoreMode mode) {
  ScoreSeries s;
  s.clip_id = clip.id;
  s.lambda_s =
      mode == ScoreMode::combined ? calibrate_lambda_s(terms.pixel, terms.disc) : 0.0;

  std::vector<double> interior(terms.centers.size());
  for (std::size_t i = 0; i < terms.centers.size(); ++i) {
    switch (mode) {
      case ScoreMode::combined:
        interior[i] = abnormality_loss(terms.pixel[i], terms.disc[i], s.lambda_s);
        break;
      case ScoreMode::generator_only:
        interior[i] = terms.pixel[i];
        break;
      case ScoreMode::discriminator_only:
        interior[i] = terms.disc[i];
        break;
    }
  }
  const int length = clip.length();
  s.abnormality = broadcast_to_clip(interior, terms.centers, length);
  s.pixel_term = broadcast_to_clip(terms.pixel, terms.centers, length);
  s.disc_term = broadcast_to_clip(terms.disc, terms.centers, length);
  return s;
}

}  // namespace

double abnormality_loss(const std::vector<TensorF>& window, const TensorF& center,
                        const TensorF& seq, const Generator<float>& gen,
                        const Discriminator<float>& disc, double lambda_s) {
  const TensorF generated = gen.forward(window);
  const double pixel = static_cast<double>(pixel_loss(generated, center));
  const double doubt = static_cast<double>(neg_log_realness(disc.forward(seq)));
  return abnormality_loss(pixel, doubt, lambda_s);
}

double calibrate_lambda_s(const std::vector<double>& pixel_terms,
                          const std::vector<double>& disc_terms) {
  if (pixel_terms.empty() || disc_terms.empty())
    throw std::invalid_argument("calibrate_lambda_s: empty term series");
  double max_pixel = 0, max_disc = 0;
  for (const double v : pixel_terms) max_pixel = std::max(max_pixel, v);
  for (const double v : disc_terms) max_disc = std::max(max_disc, std::abs(v));
  if (max_disc == 0.0) return 0.0;
  return (max_pixel / max_disc) / 10.0;
}

std::vector<double> normalize_scores(const std::vector<double>& losses) {
  if (losses.empty()) throw std::invalid_argument("normalize_scores: empty series");
  const auto [lo_it, hi_it] = std::minmax_element(losses.begin(), losses.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(losses.size(), 0.0);
  if (hi == lo) return out;  // constant series: nothing stands out
  const double span = hi - lo;
  for (std::size_t i = 0; i < losses.size(); ++i) out[i] = (losses[i] - lo) / span;
  return out;
}

ScoreSeries score_clip(const Clip& clip, const Generator<float>& gen,
                       const Discriminator<float>& disc, ScoreMode mode) {
  ScoreSeries s = assemble_series(clip, evidence_terms(clip, gen, disc), mode);
  s.score = normalize_scores(s.abnormality);
  return s;
}

std::vector<ScoreSeries> score_dataset(const std::vector<Clip>& clips,
                                       const Generator<float>& gen,
                                       const Discriminator<float>& disc, ScoreMode mode,
                                       bool global_norm) {
  std::vector<ScoreSeries> out;
  for (const auto& clip : clips)
    out.push_back(assemble_series(clip, evidence_terms(clip, gen, disc), mode));

  if (!global_norm) {
    for (auto& s : out) s.score = normalize_scores(s.abnormality);
    return out;
  }
  // One shared min-max range across the whole collection.
  std::vector<double> all;
  for (const auto& s : out) all.insert(all.end(), s.abnormality.begin(), s.abnormality.end());
  const auto [lo_it, hi_it] = std::minmax_element(all.begin(), all.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  for (auto& s : out) {
    s.score.assign(s.abnormality.size(), 0.0);
    if (span == 0.0) continue;
    for (std::size_t i = 0; i < s.abnormality.size(); ++i)
      s.score[i] = (s.abnormality[i] - lo) / span;
  }
  return out;
}

std::vector<ScoreRow> to_score_rows(const std::vector<ScoreSeries>& series) {
  std::vector<ScoreRow> rows;
  for (const auto& s : series)
    for (std::size_t t = 0; t < s.score.size(); ++t)
      rows.push_back({s.clip_id, static_cast<int>(t), s.score[t], s.pixel_term[t],
                      s.disc_term[t], s.lambda_s});
  return rows;
}

}  // namespace stvad
