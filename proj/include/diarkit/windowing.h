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

#ifndef DIARKIT_WINDOWING_H_
#define DIARKIT_WINDOWING_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "diarkit/timeline.h"

namespace diarkit {

struct WindowPlan {
  Millis window_length = 5000;
  Millis shift = 1000;
  Millis min_window = 1000;

  // Throws ConfigError unless 0 < shift <= window_length and
  // 0 < min_window <= window_length.
  void validate() const;
};

// Splits each speech segment into windows of window_length every shift. A
// final window aligned to the segment end covers any leftover tail; segments
// shorter than a window yield one window if they reach min_window.
std::vector<Segment> make_windows(std::span<const Segment> speech, const WindowPlan &plan);

inline constexpr double kDefaultFrameRate = 100.0;

// Frame-level speaker activity of one local speaker inside one window.
struct LocalActivity {
  Segment window;
  int local_speaker = 0;
  double frame_rate = kDefaultFrameRate;
  std::vector<double> frame_activity;
};

struct LocalKey {
  Segment window;
  int local_speaker = 0;
  friend auto operator<=>(const LocalKey &, const LocalKey &) = default;
};

struct AssemblyConfig {
  double threshold = 0.5;
  Millis min_on = 0;
  Millis min_off = 0;
};

// Stitches clustered local activities into a recording-level annotation.
// Per label and frame, the activity is the mean over the covering windows
// assigned to that label, binarized with a strict `>` against the threshold.
// Gaps shorter than min_off are closed, then runs shorter than min_on dropped.
Annotation assemble_global(const std::string &recording_id, std::span<const LocalActivity> locals,
                           const std::map<LocalKey, std::string> &cluster_of,
                           const AssemblyConfig &config);

// Converts one hard label per window into single-label regions. Where
// consecutive windows overlap, the boundary is placed halfway between their
// centres; output never leaves the windows' extent.
Annotation windows_to_annotation(const std::string &recording_id,
                                 std::span<const Segment> windows,
                                 std::span<const std::string> labels);

}  // namespace diarkit

#endif  // DIARKIT_WINDOWING_H_
