#pragma once

#include <string>
#include <vector>

namespace stvad {

// Row types for the three tabular artifacts the pipeline exchanges. Every
// writer emits a header line; readers accept files with or without one.

/// `clip_id,frame_index,label`
struct LabelRow {
  std::string clip_id;
  int frame_index = 0;
  int label = 0;
};

/// `clip_id,start,end` (inclusive frame interval)
struct EventRow {
  std::string clip_id;
  int start = 0;
  int end = 0;
};

/// `clip_id,frame_index,score,pixel_term,disc_term,lambda_s`
struct ScoreRow {
  std::string clip_id;
  int frame_index = 0;
  double score = 0;
  double pixel_term = 0;
  double disc_term = 0;
  double lambda_s = 0;
};

void write_labels_csv(const std::string& path, const std::vector<LabelRow>& rows);
std::vector<LabelRow> read_labels_csv(const std::string& path);

void write_events_csv(const std::string& path, const std::vector<EventRow>& rows);
std::vector<EventRow> read_events_csv(const std::string& path);

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores_csv(const std::string& path);

}  // namespace stvad
