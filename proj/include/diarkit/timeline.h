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

// Labeled time segments over a recording, and RTTM / UEM file I/O.
//
// Times are held as integer milliseconds so that a parse/write round trip is
// bit-exact and DER sums never depend on floating point formatting.

#ifndef DIARKIT_TIMELINE_H_
#define DIARKIT_TIMELINE_H_

#include <compare>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diarkit/common.h"

namespace diarkit {

class Segment {
 public:
  Segment() = default;
  // Throws DataError unless onset >= 0 and duration > 0.
  Segment(Millis onset, Millis duration);
  static Segment from_bounds(Millis onset, Millis end);
  static Segment from_seconds(double onset, double duration);

  Millis onset() const { return onset_; }
  Millis duration() const { return duration_; }
  Millis end() const { return onset_ + duration_; }
  double onset_seconds() const { return millis_to_seconds(onset_); }
  double duration_seconds() const { return millis_to_seconds(duration_); }
  double end_seconds() const { return millis_to_seconds(end()); }

  bool contains(const Segment &other) const {
    return other.onset_ >= onset_ && other.end() <= end();
  }

  // Ordered by (onset, end).
  friend bool operator==(const Segment &a, const Segment &b) = default;
  friend std::strong_ordering operator<=>(const Segment &a, const Segment &b) {
    if (auto c = a.onset_ <=> b.onset_; c != 0) return c;
    return a.end() <=> b.end();
  }

 private:
  Millis onset_ = 0;
  Millis duration_ = 1;
};

// Length of the intersection of two segments (0 when disjoint).
Millis overlap(const Segment &a, const Segment &b);

struct LabeledSegment {
  Segment segment;
  std::string label;

  friend bool operator==(const LabeledSegment &, const LabeledSegment &) = default;
  friend auto operator<=>(const LabeledSegment &a, const LabeledSegment &b) {
    if (auto c = a.segment <=> b.segment; c != 0) return c <=> 0;
    return a.label.compare(b.label) <=> 0;
  }
};

// Segments of one recording, kept sorted by (onset, end, label). Overlapping
// segments with different labels are allowed; exact duplicates are not.
class Annotation {
 public:
  Annotation() = default;
  explicit Annotation(std::string recording_id) : recording_id_(std::move(recording_id)) {}
  // Throws DataError on duplicate (segment, label) pairs.
  Annotation(std::string recording_id, std::vector<LabeledSegment> entries);

  const std::string &recording_id() const { return recording_id_; }
  const std::vector<LabeledSegment> &entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  // Throws DataError if the pair is already present.
  void add(const Segment &segment, const std::string &label);
  // Returns false instead of throwing on duplicates.
  bool try_add(const Segment &segment, const std::string &label);

  // Sorted distinct labels.
  std::vector<std::string> labels() const;
  // Latest end time, 0 when empty.
  Millis max_end() const;
  // Sum of segment durations (overlapped speech counted once per label).
  Millis total_duration() const;
  // Merges touching or overlapping segments that carry the same label.
  Annotation merged() const;

  friend bool operator==(const Annotation &, const Annotation &) = default;

 private:
  std::string recording_id_;
  std::vector<LabeledSegment> entries_;
};

// Scored regions of one recording: sorted and pairwise disjoint.
class Uem {
 public:
  Uem() = default;
  // Throws DataError if regions overlap; input order does not matter.
  Uem(std::string recording_id, std::vector<Segment> regions);

  const std::string &recording_id() const { return recording_id_; }
  const std::vector<Segment> &regions() const { return regions_; }
  Millis total_duration() const;

  friend bool operator==(const Uem &, const Uem &) = default;

 private:
  std::string recording_id_;
  std::vector<Segment> regions_;
};

// One Annotation per distinct recording id, ordered by recording id.
std::vector<Annotation> rttm_parse(std::string_view text);
std::string rttm_write(std::span<const Annotation> annotations);
std::string rttm_write(const Annotation &annotation);

// UEM lines: `<rec> <channel> <onset> <end>`.
std::vector<Uem> uem_parse(std::string_view text);
std::string uem_write(std::span<const Uem> uems);

std::vector<Annotation> rttm_read_file(const std::string &path);
void rttm_write_file(const std::string &path, std::span<const Annotation> annotations);
std::vector<Uem> uem_read_file(const std::string &path);

// Keys annotations by recording id; throws DataError on repeated ids.
std::map<std::string, Annotation> index_by_recording(std::vector<Annotation> annotations);

// Intersects every segment with the scored regions; empty pieces are dropped.
Annotation crop(const Annotation &annotation, const Uem &uem);
// Sorted distinct onset and end times over all annotations.
std::vector<Millis> boundaries(std::span<const Annotation> annotations);

// Whole-recording UEM [0, max end] used when no UEM file is supplied.
Uem default_uem(const Annotation &reference, const Annotation &hypothesis);

// Helpers shared by the file readers.
std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, std::string_view text);

}  // namespace diarkit

#endif  // DIARKIT_TIMELINE_H_
