#include "stvad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace stvad {

void LabeledScores::validate() const {
  if (scores.size() != labels.size())
    throw std::invalid_argument("scores and labels must align 1:1");
  if (scores.empty()) throw std::invalid_argument("no labeled scores");
  for (const int l : labels)
    if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
}

double roc_auc(const LabeledScores& data) {
  data.validate();
  const std::size_t n = data.scores.size();
  std::size_t n_pos = 0;
  for (const int l : data.labels) n_pos += static_cast<std::size_t>(l);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("roc_auc needs both classes present");

  // Mann-Whitney rank sum with average ranks over ties; ties contribute the
  // half credit the rank statistic demands.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.scores[a] < data.scores[b]; });

  double rank_sum_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && data.scores[order[j]] == data.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (data.labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<Interval> detect_events(const std::vector<double>& series, double threshold,
                                    int merge_gap) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("threshold must lie in (0, 1)");
  if (merge_gap < 0) throw std::invalid_argument("merge_gap must be >= 0");

  std::vector<Interval> runs;
  const int n = static_cast<int>(series.size());
  int t = 0;
  while (t < n) {
    if (series[static_cast<std::size_t>(t)] >= threshold) {
      const int start = t;
      while (t < n && series[static_cast<std::size_t>(t)] >= threshold) ++t;
      runs.push_back({start, t - 1});
    } else {
      ++t;
    }
  }
  if (runs.empty()) return runs;

  std::vector<Interval> merged{runs.front()};
  for (std::size_t r = 1; r < runs.size(); ++r) {
    const int gap = runs[r].start - merged.back().end - 1;
    if (gap < merge_gap)
      merged.back().end = runs[r].end;
    else
      merged.push_back(runs[r]);
  }
  return merged;
}

EventResult event_metrics(const std::vector<Interval>& detected,
                          const std::vector<Interval>& ground_truth) {
  EventResult result;
  std::vector<bool> claimed(ground_truth.size(), false);
  for (const auto& d : detected) {
    bool overlaps_any = false;
    int fresh = -1;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const bool overlap = d.start <= ground_truth[g].end && ground_truth[g].start <= d.end;
      if (!overlap) continue;
      overlaps_any = true;
      if (!claimed[g] && fresh < 0) fresh = static_cast<int>(g);
    }
    if (!overlaps_any) {
      ++result.false_alarms;
    } else if (fresh >= 0) {
      claimed[static_cast<std::size_t>(fresh)] = true;
      ++result.correct_detections;
    }
    // A detection re-covering an already-credited event counts neither way.
  }
  const int denom = result.correct_detections + result.false_alarms;
  result.precision_defined = denom > 0;
  if (result.precision_defined)
    result.precision = static_cast<double>(result.correct_detections) / denom;
  return result;
}

double best_threshold_youden(const LabeledScores& data) {
  data.validate();
  double pos_total = 0, neg_total = 0;
  for (const int l : data.labels) (l == 1 ? pos_total : neg_total) += 1.0;
  if (pos_total == 0 || neg_total == 0)
    throw std::invalid_argument("best_threshold_youden needs both classes");

  // Sweep candidate cuts midway between adjacent distinct scores.
  std::vector<double> sorted = data.scores;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  double best_j = -2.0, best_threshold = 0.5;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double cut = 0.5 * (sorted[i] + sorted[i + 1]);
    if (!(cut > 0.0 && cut < 1.0)) continue;
    double tp = 0, fp = 0;
    for (std::size_t k = 0; k < data.scores.size(); ++k)
      if (data.scores[k] >= cut) (data.labels[k] == 1 ? tp : fp) += 1.0;
    const double j = tp / pos_total - fp / neg_total;
    if (j > best_j) {
      best_j = j;
      best_threshold = cut;
    }
  }
  return best_threshold;
}

namespace {

struct ClipJoin {
  std::vector<double> scores;  // frame-indexed
  std::vector<int> labels;
  std::vector<Interval> truth;
};

}  // namespace

EvalReport evaluate(const std::vector<ScoreRow>& scores, const std::vector<LabelRow>& labels,
                    const std::vector<EventRow>& events, double threshold, int merge_gap) {
  std::map<std::string, ClipJoin> clips;
  for (const auto& r : scores) {
    auto& c = clips[r.clip_id];
    if (static_cast<int>(c.scores.size()) <= r.frame_index) {
      c.scores.resize(static_cast<std::size_t>(r.frame_index) + 1, 0.0);
      c.labels.resize(static_cast<std::size_t>(r.frame_index) + 1, -1);
    }
    c.scores[static_cast<std::size_t>(r.frame_index)] = r.score;
  }
  for (const auto& r : labels) {
    auto it = clips.find(r.clip_id);
    if (it == clips.end())
      throw std::invalid_argument("label row for unscored clip '" + r.clip_id + "'");
    if (r.frame_index < 0 || r.frame_index >= static_cast<int>(it->second.labels.size()))
      throw std::invalid_argument("label frame index out of scored range for clip '" +
                                  r.clip_id + "'");
    it->second.labels[static_cast<std::size_t>(r.frame_index)] = r.label;
  }
  for (const auto& e : events) {
    auto it = clips.find(e.clip_id);
    if (it == clips.end())
      throw std::invalid_argument("event row for unscored clip '" + e.clip_id + "'");
    it->second.truth.push_back({e.start, e.end});
  }

  EvalReport report;
  report.threshold = threshold;
  report.merge_gap = merge_gap;

  LabeledScores pooled;
  for (const auto& [id, c] : clips) {
    LabeledScores per_clip;
    for (std::size_t t = 0; t < c.scores.size(); ++t) {
      if (c.labels[t] < 0)
        throw std::invalid_argument("clip '" + id + "' has scored frames without labels");
      pooled.scores.push_back(c.scores[t]);
      pooled.labels.push_back(c.labels[t]);
      per_clip.scores.push_back(c.scores[t]);
      per_clip.labels.push_back(c.labels[t]);
    }
    const bool has_pos = std::find(per_clip.labels.begin(), per_clip.labels.end(), 1) !=
                         per_clip.labels.end();
    const bool has_neg = std::find(per_clip.labels.begin(), per_clip.labels.end(), 0) !=
                         per_clip.labels.end();
    if (has_pos && has_neg) report.per_clip_auc.emplace_back(id, roc_auc(per_clip));

    const auto detected = detect_events(c.scores, threshold, merge_gap);
    const auto partial = event_metrics(detected, c.truth);
    report.events.correct_detections += partial.correct_detections;
    report.events.false_alarms += partial.false_alarms;
  }
  report.auc = roc_auc(pooled);
  const int denom = report.events.correct_detections + report.events.false_alarms;
  report.events.precision_defined = denom > 0;
  report.events.precision =
      denom > 0 ? static_cast<double>(report.events.correct_detections) / denom : 0.0;
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", report.auc);
  out << "frame_auc," << buf << "\n";
  for (const auto& [id, auc] : report.per_clip_auc) {
    std::snprintf(buf, sizeof buf, "%.4f", auc);
    out << "clip_auc," << id << "," << buf << "\n";
  }
  out << "threshold," << report.threshold << "\n";
  out << "merge_gap," << report.merge_gap << "\n";
  out << "correct_detections," << report.events.correct_detections << "\n";
  out << "false_alarms," << report.events.false_alarms << "\n";
  if (report.events.precision_defined) {
    std::snprintf(buf, sizeof buf, "%.4f", report.events.precision);
    out << "precision," << buf << "\n";
  } else {
    out << "precision,\n";  // undefined: empty field
  }
  return out.str();
}

}  // namespace stvad
