#include "stvad/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stvad {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out.good()) throw std::runtime_error("cannot write: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot read: " + path);
  return in;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool is_header_or_blank(const std::string& line) {
  if (line.empty() || line[0] == '#') return true;
  return line.rfind("clip_id", 0) == 0;
}

int parse_int(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed integer field '" + s + "' in " + path);
  }
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed numeric field '" + s + "' in " + path);
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void write_labels_csv(const std::string& path, const std::vector<LabelRow>& rows) {
  auto out = open_out(path);
  out << "clip_id,frame_index,label\n";
  for (const auto& r : rows) out << r.clip_id << ',' << r.frame_index << ',' << r.label << '\n';
}

std::vector<LabelRow> read_labels_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<LabelRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (is_header_or_blank(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != 3) throw std::runtime_error("expected 3 fields per label row in " + path);
    rows.push_back({f[0], parse_int(f[1], path), parse_int(f[2], path)});
  }
  return rows;
}

void write_events_csv(const std::string& path, const std::vector<EventRow>& rows) {
  auto out = open_out(path);
  out << "clip_id,start,end\n";
  for (const auto& r : rows) out << r.clip_id << ',' << r.start << ',' << r.end << '\n';
}

std::vector<EventRow> read_events_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<EventRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (is_header_or_blank(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != 3) throw std::runtime_error("expected 3 fields per event row in " + path);
    rows.push_back({f[0], parse_int(f[1], path), parse_int(f[2], path)});
  }
  return rows;
}

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows) {
  auto out = open_out(path);
  out << "clip_id,frame_index,score,pixel_term,disc_term,lambda_s\n";
  for (const auto& r : rows)
    out << r.clip_id << ',' << r.frame_index << ',' << fmt(r.score) << ',' << fmt(r.pixel_term)
        << ',' << fmt(r.disc_term) << ',' << fmt(r.lambda_s) << '\n';
}

std::vector<ScoreRow> read_scores_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<ScoreRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (is_header_or_blank(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) throw std::runtime_error("expected 6 fields per score row in " + path);
    rows.push_back({f[0], parse_int(f[1], path), parse_double(f[2], path),
                    parse_double(f[3], path), parse_double(f[4], path),
                    parse_double(f[5], path)});
  }
  return rows;
}

}  // namespace stvad
