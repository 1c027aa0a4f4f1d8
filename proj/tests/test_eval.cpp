#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "stvad/eval.hpp"
#include "stvad/rng.hpp"

using namespace stvad;

namespace {

/// Brute-force pairwise AUC: fraction of (positive, negative) pairs ranked
/// correctly, half credit on ties.
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double credit = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[i] != 1 || labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j])
        credit += 1.0;
      else if (scores[i] == scores[j])
        credit += 0.5;
    }
  return credit / pairs;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("rank-statistic AUC on pinned cases") {
  CHECK(roc_auc({{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}}) == 1.0);
  CHECK(roc_auc({{0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}}) == 0.5);
  CHECK(roc_auc({{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}}) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(roc_auc({{0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}}) == 0.0);  // perfectly inverted
}

TEST_CASE("AUC agrees with the exhaustive pairwise oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    LabeledScores data;
    const int n = 5 + static_cast<int>(rng.uniform_int(0, 40));
    for (int i = 0; i < n; ++i) {
      // Quantized scores keep ties frequent so the half-credit rule is hit.
      data.scores.push_back(rng.uniform_int(0, 10) / 10.0);
      data.labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
    }
    const bool has_pos = std::count(data.labels.begin(), data.labels.end(), 1) > 0;
    const bool has_neg = std::count(data.labels.begin(), data.labels.end(), 0) > 0;
    if (!has_pos || !has_neg) continue;
    CHECK(roc_auc(data) ==
          doctest::Approx(pairwise_auc(data.scores, data.labels)).epsilon(1e-12));
  }
}

TEST_CASE("AUC invariances") {
  Rng rng(43);
  LabeledScores data;
  for (int i = 0; i < 60; ++i) {
    data.scores.push_back(rng.uniform_int(0, 20) / 20.0);
    data.labels.push_back(i % 3 == 0 ? 1 : 0);
  }
  const double base = roc_auc(data);

  // Any strictly increasing transform preserves the ranking.
  LabeledScores warped = data;
  for (auto& s : warped.scores) s = std::exp(3.0 * s) + 0.1 * s;
  CHECK(roc_auc(warped) == doctest::Approx(base).epsilon(1e-12));

  // Labels as scores separate perfectly.
  LabeledScores perfect;
  perfect.labels = data.labels;
  for (const int l : data.labels) perfect.scores.push_back(static_cast<double>(l));
  CHECK(roc_auc(perfect) == 1.0);

  // Negating the scores mirrors the AUC.
  LabeledScores flipped = data;
  for (auto& s : flipped.scores) s = 1.0 - s;
  CHECK(roc_auc(flipped) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("degenerate labeled-score inputs raise") {
  CHECK_THROWS_AS((void)roc_auc({{0.1, 0.9}, {1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS((void)roc_auc({{0.1, 0.9}, {0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS((void)roc_auc({{0.1}, {0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS((void)roc_auc({{0.1, 0.2}, {0, 2}}), std::invalid_argument);
  CHECK_THROWS_AS((void)roc_auc({{}, {}}), std::invalid_argument);
}

TEST_CASE("event detection thresholds and merging") {
  std::vector<double> series(100, 0.1);
  CHECK(detect_events(series, 0.5).empty());

  for (int t = 10; t <= 50; ++t) series[static_cast<std::size_t>(t)] = 0.9;
  auto events = detect_events(series, 0.5);
  REQUIRE(events.size() == 1);
  CHECK(events[0].start == 10);
  CHECK(events[0].end == 50);

  // Second run separated by a 3-frame dip: merged under merge_gap 10,
  // separate under merge_gap 3.
  for (int t = 54; t <= 60; ++t) series[static_cast<std::size_t>(t)] = 0.8;
  events = detect_events(series, 0.5, 10);
  REQUIRE(events.size() == 1);
  CHECK(events[0].start == 10);
  CHECK(events[0].end == 60);
  events = detect_events(series, 0.5, 3);
  REQUIRE(events.size() == 2);
  CHECK(events[1].start == 54);

  // merge_gap 0 never merges.
  CHECK(detect_events(series, 0.5, 0).size() == 2);

  // Lowering the threshold never shrinks frame coverage.
  auto covered = [](const std::vector<Interval>& iv) {
    int frames = 0;
    for (const auto& e : iv) frames += e.end - e.start + 1;
    return frames;
  };
  CHECK(covered(detect_events(series, 0.3, 0)) >= covered(detect_events(series, 0.7, 0)));

  CHECK_THROWS_AS((void)detect_events(series, 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)detect_events(series, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)detect_events(series, 0.5, -1), std::invalid_argument);
}

TEST_CASE("event matching credits each ground-truth interval once") {
  // Twelve detections, each overlapping a distinct event: 12 / 0, precision 1.
  std::vector<Interval> truth, hits;
  for (int i = 0; i < 12; ++i) {
    truth.push_back({i * 100, i * 100 + 30});
    hits.push_back({i * 100 + 10, i * 100 + 20});
  }
  auto r = event_metrics(hits, truth);
  CHECK(r.correct_detections == 12);
  CHECK(r.false_alarms == 0);
  CHECK(r.precision_defined);
  CHECK(r.precision == 1.0);

  // No detections at all: undefined precision.
  r = event_metrics({}, truth);
  CHECK(r.correct_detections == 0);
  CHECK(r.false_alarms == 0);
  CHECK_FALSE(r.precision_defined);

  // One hit plus one stray: 1 / 1, precision one half.
  r = event_metrics({{10, 20}, {500, 510}}, {{15, 40}});
  CHECK(r.correct_detections == 1);
  CHECK(r.false_alarms == 1);
  CHECK(r.precision == doctest::Approx(0.5));

  // Two detections on the same event: one credit, no false alarm.
  r = event_metrics({{10, 12}, {20, 22}}, {{0, 30}});
  CHECK(r.correct_detections == 1);
  CHECK(r.false_alarms == 0);

  // One long detection across two events claims a single credit.
  r = event_metrics({{0, 100}}, {{10, 20}, {50, 60}});
  CHECK(r.correct_detections == 1);
  CHECK(r.false_alarms == 0);

  // Boundary-touching counts as overlap (>= 1 shared frame).
  r = event_metrics({{0, 10}}, {{10, 20}});
  CHECK(r.correct_detections == 1);
}

TEST_CASE("youden threshold separates a separable set") {
  const LabeledScores data{{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}};
  const double cut = best_threshold_youden(data);
  CHECK(cut > 0.2);
  CHECK(cut < 0.8);
  for (std::size_t i = 0; i < data.scores.size(); ++i)
    CHECK((data.scores[i] >= cut) == (data.labels[i] == 1));
}

TEST_CASE("joined evaluation over score, label, and event rows") {
  std::vector<ScoreRow> scores;
  std::vector<LabelRow> labels;
  // clip_a: anomaly on frames 4..7 scored high.
  for (int t = 0; t < 10; ++t) {
    const bool hot = t >= 4 && t <= 7;
    scores.push_back({"clip_a", t, hot ? 0.9 : 0.1, 0, 0, 0});
    labels.push_back({"clip_a", t, hot ? 1 : 0});
  }
  // clip_b: all normal, one noisy spike at frame 2.
  for (int t = 0; t < 10; ++t) {
    scores.push_back({"clip_b", t, t == 2 ? 0.8 : 0.2, 0, 0, 0});
    labels.push_back({"clip_b", t, 0});
  }
  const std::vector<EventRow> events{{"clip_a", 4, 7}};

  const auto report = evaluate(scores, labels, events, 0.5, 0);
  CHECK(report.auc == 1.0);  // every abnormal frame outranks every normal one
  REQUIRE(report.per_clip_auc.size() == 1);  // clip_b is single-class
  CHECK(report.per_clip_auc[0].first == "clip_a");
  CHECK(report.per_clip_auc[0].second == 1.0);
  CHECK(report.events.correct_detections == 1);
  CHECK(report.events.false_alarms == 1);  // the clip_b spike
  CHECK(report.events.precision == doctest::Approx(0.5));

  const auto text = format_report(report);
  CHECK(text.find("frame_auc,1.0000") != std::string::npos);
  CHECK(text.find("clip_auc,clip_a,1.0000") != std::string::npos);
  CHECK(text.find("correct_detections,1") != std::string::npos);
  CHECK(text.find("precision,0.5000") != std::string::npos);

  // Undefined precision prints an empty field.
  EvalReport quiet;
  quiet.auc = 0.5;
  CHECK(format_report(quiet).find("precision,\n") != std::string::npos);

  // Label rows must reference scored clips and frames.
  auto bad_labels = labels;
  bad_labels.push_back({"clip_zzz", 0, 0});
  CHECK_THROWS_AS((void)evaluate(scores, bad_labels, events, 0.5, 0), std::invalid_argument);
  // Scored frames without labels are an alignment error.
  std::vector<LabelRow> partial(labels.begin(), labels.begin() + 5);
  CHECK_THROWS_AS((void)evaluate(scores, partial, events, 0.5, 0), std::invalid_argument);
}

}  // TEST_SUITE
