#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stvad/csv.hpp"

namespace stvad {

/// Frame scores paired with binary ground-truth labels.
struct LabeledScores {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 = normal, 1 = abnormal
  void validate() const;
};

/// Inclusive frame interval [start, end].
struct Interval {
  int start = 0;
  int end = 0;
};

struct EventResult {
  int correct_detections = 0;
  int false_alarms = 0;
  bool precision_defined = false;  // false when there are no detections at all
  double precision = 0.0;          // correct / (correct + false_alarms)
};

/// Area under the ROC curve via the rank statistic
/// P(score_pos > score_neg) + 0.5 * P(equal). Throws when only one class is
/// present.
double roc_auc(const LabeledScores& data);

/// Maximal runs of frames with score >= threshold; runs separated by fewer
/// than merge_gap below-threshold frames are merged. Threshold must lie in
/// (0, 1).
std::vector<Interval> detect_events(const std::vector<double>& series, double threshold,
                                    int merge_gap = 50);

/// A detection overlapping at least one ground-truth interval (by >= 1 frame)
/// is correct; each ground-truth interval yields at most one credit; a
/// detection overlapping nothing is a false alarm.
EventResult event_metrics(const std::vector<Interval>& detected,
                          const std::vector<Interval>& ground_truth);

/// Threshold maximizing TPR - FPR over the observed score values; a sensible
/// operating point when none is supplied.
double best_threshold_youden(const LabeledScores& data);

/// Full evaluation over CSV-level records: joins scores to labels by
/// (clip_id, frame_index), pools frames for the overall AUC, computes
/// per-clip AUC where both classes occur, and runs event detection per clip
/// against the ground-truth intervals.
struct EvalReport {
  double auc = 0.0;
  std::vector<std::pair<std::string, double>> per_clip_auc;
  EventResult events;
  double threshold = 0.5;
  int merge_gap = 50;
};

EvalReport evaluate(const std::vector<ScoreRow>& scores, const std::vector<LabelRow>& labels,
                    const std::vector<EventRow>& events, double threshold,
                    int merge_gap = 50);

/// Human-readable report; an undefined precision prints as an empty field.
std::string format_report(const EvalReport& report);

}  // namespace stvad
