// Copyright 2026 The diarkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "diarkit/timeline.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace diarkit {

Segment::Segment(Millis onset, Millis duration) : onset_(onset), duration_(duration) {
  if (onset < 0) throw DataError("segment onset must be non-negative, got " + format_millis(onset));
  if (duration <= 0)
    throw DataError("segment duration must be positive, got " + format_millis(duration));
}

Segment Segment::from_bounds(Millis onset, Millis end) { return Segment(onset, end - onset); }

Segment Segment::from_seconds(double onset, double duration) {
  return Segment(seconds_to_millis(onset), seconds_to_millis(duration));
}

Millis overlap(const Segment &a, const Segment &b) {
  const Millis lo = std::max(a.onset(), b.onset());
  const Millis hi = std::min(a.end(), b.end());
  return hi > lo ? hi - lo : 0;
}

Annotation::Annotation(std::string recording_id, std::vector<LabeledSegment> entries)
    : recording_id_(std::move(recording_id)), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  auto dup = std::adjacent_find(entries_.begin(), entries_.end());
  if (dup != entries_.end()) {
    throw DataError("duplicate segment " + format_millis(dup->segment.onset()) + "+" +
                    format_millis(dup->segment.duration()) + " for label '" + dup->label +
                    "' in recording '" + recording_id_ + "'");
  }
}

bool Annotation::try_add(const Segment &segment, const std::string &label) {
  LabeledSegment entry{segment, label};
  auto pos = std::lower_bound(entries_.begin(), entries_.end(), entry);
  if (pos != entries_.end() && *pos == entry) return false;
  entries_.insert(pos, std::move(entry));
  return true;
}

void Annotation::add(const Segment &segment, const std::string &label) {
  if (!try_add(segment, label)) {
    throw DataError("duplicate segment for label '" + label + "' in recording '" +
                    recording_id_ + "'");
  }
}

std::vector<std::string> Annotation::labels() const {
  std::vector<std::string> out;
  for (const auto &e : entries_) out.push_back(e.label);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Millis Annotation::max_end() const {
  Millis end = 0;
  for (const auto &e : entries_) end = std::max(end, e.segment.end());
  return end;
}

Millis Annotation::total_duration() const {
  Millis total = 0;
  for (const auto &e : entries_) total += e.segment.duration();
  return total;
}

Annotation Annotation::merged() const {
  std::map<std::string, std::vector<Segment>> by_label;
  for (const auto &e : entries_) by_label[e.label].push_back(e.segment);
  std::vector<LabeledSegment> out;
  for (auto &[label, segs] : by_label) {
    // entries_ are sorted by onset so each label's list is too.
    Millis start = segs.front().onset();
    Millis end = segs.front().end();
    for (std::size_t i = 1; i < segs.size(); ++i) {
      if (segs[i].onset() <= end) {
        end = std::max(end, segs[i].end());
      } else {
        out.push_back({Segment::from_bounds(start, end), label});
        start = segs[i].onset();
        end = segs[i].end();
      }
    }
    out.push_back({Segment::from_bounds(start, end), label});
  }
  return Annotation(recording_id_, std::move(out));
}

Uem::Uem(std::string recording_id, std::vector<Segment> regions)
    : recording_id_(std::move(recording_id)), regions_(std::move(regions)) {
  std::sort(regions_.begin(), regions_.end());
  for (std::size_t i = 1; i < regions_.size(); ++i) {
    if (regions_[i].onset() < regions_[i - 1].end())
      throw DataError("overlapping UEM regions in recording '" + recording_id_ + "'");
  }
}

Millis Uem::total_duration() const {
  Millis total = 0;
  for (const auto &r : regions_) total += r.duration();
  return total;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

Millis parse_time(std::string_view field, std::size_t line_no, const char *what) {
  std::string buf(field);
  char *end = nullptr;
  errno = 0;
  const double value = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE || !std::isfinite(value))
    throw ParseError(line_no, std::string("invalid ") + what + " '" + buf + "'");
  return seconds_to_millis(value);
}

template <typename Fn>
void for_each_line(std::string_view text, Fn &&fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields[0].starts_with(";;")) continue;
    fn(line_no, fields);
  }
}

}  // namespace

std::vector<Annotation> rttm_parse(std::string_view text) {
  std::map<std::string, std::vector<LabeledSegment>> by_rec;
  std::map<std::string, std::size_t> first_line;
  for_each_line(text, [&](std::size_t line_no, const std::vector<std::string_view> &f) {
    if (f.size() < 9)
      throw ParseError(line_no, "expected at least 9 fields, got " + std::to_string(f.size()));
    if (f[0] != "SPEAKER")
      throw ParseError(line_no, "expected type SPEAKER, got '" + std::string(f[0]) + "'");
    const Millis onset = parse_time(f[3], line_no, "onset");
    const Millis duration = parse_time(f[4], line_no, "duration");
    if (onset < 0) throw ParseError(line_no, "negative onset");
    if (duration <= 0) throw ParseError(line_no, "non-positive duration");
    std::string rec(f[1]);
    first_line.try_emplace(rec, line_no);
    by_rec[rec].push_back({Segment(onset, duration), std::string(f[7])});
  });
  std::vector<Annotation> out;
  for (auto &[rec, entries] : by_rec) {
    try {
      out.emplace_back(rec, std::move(entries));
    } catch (const DataError &e) {
      throw ParseError(first_line[rec], e.what());
    }
  }
  return out;
}

std::string rttm_write(std::span<const Annotation> annotations) {
  std::string out;
  for (const auto &a : annotations) {
    for (const auto &e : a.entries()) {
      out += "SPEAKER ";
      out += a.recording_id();
      out += " 1 ";
      out += format_millis(e.segment.onset());
      out += ' ';
      out += format_millis(e.segment.duration());
      out += " <NA> <NA> ";
      out += e.label;
      out += " <NA> <NA>\n";
    }
  }
  return out;
}

std::string rttm_write(const Annotation &annotation) {
  return rttm_write(std::span<const Annotation>(&annotation, 1));
}

std::vector<Uem> uem_parse(std::string_view text) {
  std::map<std::string, std::vector<Segment>> by_rec;
  std::map<std::string, std::size_t> first_line;
  for_each_line(text, [&](std::size_t line_no, const std::vector<std::string_view> &f) {
    if (f.size() != 4)
      throw ParseError(line_no, "expected 4 UEM fields, got " + std::to_string(f.size()));
    const Millis onset = parse_time(f[2], line_no, "onset");
    const Millis end = parse_time(f[3], line_no, "end");
    if (onset < 0 || end <= onset) throw ParseError(line_no, "invalid UEM region");
    std::string rec(f[0]);
    first_line.try_emplace(rec, line_no);
    by_rec[rec].push_back(Segment::from_bounds(onset, end));
  });
  std::vector<Uem> out;
  for (auto &[rec, regions] : by_rec) {
    try {
      out.emplace_back(rec, std::move(regions));
    } catch (const DataError &e) {
      throw ParseError(first_line[rec], e.what());
    }
  }
  return out;
}

std::string uem_write(std::span<const Uem> uems) {
  std::string out;
  for (const auto &u : uems) {
    for (const auto &r : u.regions()) {
      out += u.recording_id() + " 1 " + format_millis(r.onset()) + " " + format_millis(r.end()) +
             "\n";
    }
  }
  return out;
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string &path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<Annotation> rttm_read_file(const std::string &path) {
  try {
    return rttm_parse(read_text_file(path));
  } catch (const ParseError &e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

void rttm_write_file(const std::string &path, std::span<const Annotation> annotations) {
  write_text_file(path, rttm_write(annotations));
}

std::vector<Uem> uem_read_file(const std::string &path) {
  return uem_parse(read_text_file(path));
}

std::map<std::string, Annotation> index_by_recording(std::vector<Annotation> annotations) {
  std::map<std::string, Annotation> out;
  for (auto &a : annotations) {
    std::string rec = a.recording_id();
    if (!out.emplace(rec, std::move(a)).second)
      throw DataError("recording '" + rec + "' listed twice");
  }
  return out;
}

Annotation crop(const Annotation &annotation, const Uem &uem) {
  Annotation out(annotation.recording_id());
  const auto &regions = uem.regions();
  for (const auto &e : annotation.entries()) {
    // First region whose end is past the segment onset.
    auto it = std::upper_bound(regions.begin(), regions.end(), e.segment.onset(),
                               [](Millis t, const Segment &r) { return t < r.end(); });
    for (; it != regions.end() && it->onset() < e.segment.end(); ++it) {
      const Millis lo = std::max(it->onset(), e.segment.onset());
      const Millis hi = std::min(it->end(), e.segment.end());
      if (hi > lo) out.try_add(Segment::from_bounds(lo, hi), e.label);
    }
  }
  return out;
}

std::vector<Millis> boundaries(std::span<const Annotation> annotations) {
  std::vector<Millis> times;
  for (const auto &a : annotations) {
    for (const auto &e : a.entries()) {
      times.push_back(e.segment.onset());
      times.push_back(e.segment.end());
    }
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

Uem default_uem(const Annotation &reference, const Annotation &hypothesis) {
  const Millis end = std::max(reference.max_end(), hypothesis.max_end());
  if (end == 0) return Uem(reference.recording_id(), {});
  return Uem(reference.recording_id(), {Segment::from_bounds(0, end)});
}

}  // namespace diarkit
