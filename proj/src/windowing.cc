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

#include "diarkit/windowing.h"

#include <algorithm>
#include <cmath>

namespace diarkit {

void WindowPlan::validate() const {
  if (window_length <= 0) throw ConfigError("window length must be positive");
  if (shift <= 0 || shift > window_length)
    throw ConfigError("window shift must lie in (0, window length]");
  if (min_window <= 0 || min_window > window_length)
    throw ConfigError("minimum window must lie in (0, window length]");
}

std::vector<Segment> make_windows(std::span<const Segment> speech, const WindowPlan &plan) {
  plan.validate();
  for (std::size_t i = 1; i < speech.size(); ++i) {
    if (speech[i].onset() < speech[i - 1].end())
      throw DataError("speech segments must be sorted and disjoint");
  }
  std::vector<Segment> windows;
  for (const auto &seg : speech) {
    const Millis a = seg.onset();
    const Millis b = seg.end();
    if (b - a < plan.window_length) {
      if (b - a >= plan.min_window) windows.push_back(seg);
      continue;
    }
    Millis last_end = a;
    for (Millis start = a; start + plan.window_length <= b; start += plan.shift) {
      windows.emplace_back(start, plan.window_length);
      last_end = start + plan.window_length;
    }
    if (last_end < b) windows.push_back(Segment::from_bounds(b - plan.window_length, b));
  }
  return windows;
}

namespace {

Millis frame_time(std::int64_t frame, double frame_rate) {
  return static_cast<Millis>(std::llround(static_cast<double>(frame) * 1000.0 / frame_rate));
}

}  // namespace

Annotation assemble_global(const std::string &recording_id, std::span<const LocalActivity> locals,
                           const std::map<LocalKey, std::string> &cluster_of,
                           const AssemblyConfig &config) {
  Annotation out(recording_id);
  if (locals.empty()) return out;
  if (config.min_on < 0 || config.min_off < 0)
    throw ConfigError("min_on and min_off must be non-negative");

  const double frame_rate = locals.front().frame_rate;
  if (!(frame_rate > 0)) throw ConfigError("frame rate must be positive");

  struct Accum {
    std::vector<double> sum;
    std::vector<int> count;
  };
  std::map<std::string, Accum> per_label;
  std::int64_t total_frames = 0;

  for (const auto &local : locals) {
    if (local.frame_rate != frame_rate)
      throw DataError("frame rate mismatch across local activities");
    const auto expected = std::llround(local.window.duration_seconds() * frame_rate);
    if (static_cast<std::int64_t>(local.frame_activity.size()) != expected)
      throw DataError("window at " + format_millis(local.window.onset()) + " has " +
                      std::to_string(local.frame_activity.size()) + " frames, expected " +
                      std::to_string(expected));
    auto it = cluster_of.find({local.window, local.local_speaker});
    if (it == cluster_of.end())
      throw DataError("no cluster assignment for local speaker " +
                      std::to_string(local.local_speaker) + " of window at " +
                      format_millis(local.window.onset()));
    const auto first = std::llround(local.window.onset_seconds() * frame_rate);
    const auto n = static_cast<std::int64_t>(local.frame_activity.size());
    total_frames = std::max<std::int64_t>(total_frames, first + n);
    auto &acc = per_label[it->second];
    if (static_cast<std::int64_t>(acc.sum.size()) < first + n) {
      acc.sum.resize(first + n, 0.0);
      acc.count.resize(first + n, 0);
    }
    for (std::int64_t f = 0; f < n; ++f) {
      const double p = local.frame_activity[f];
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("frame activity outside [0, 1]");
      acc.sum[first + f] += p;
      acc.count[first + f] += 1;
    }
  }

  for (auto &[label, acc] : per_label) {
    // Active runs as [start_frame, end_frame).
    std::vector<std::pair<std::int64_t, std::int64_t>> runs;
    const auto n = static_cast<std::int64_t>(acc.sum.size());
    for (std::int64_t f = 0; f < n;) {
      auto active = [&](std::int64_t g) {
        return acc.count[g] > 0 && acc.sum[g] / acc.count[g] > config.threshold;
      };
      if (!active(f)) {
        ++f;
        continue;
      }
      std::int64_t g = f;
      while (g < n && active(g)) ++g;
      runs.emplace_back(f, g);
      f = g;
    }
    std::vector<std::pair<Millis, Millis>> spans;
    for (const auto &[s, e] : runs) {
      const Millis on = frame_time(s, frame_rate);
      const Millis off = frame_time(e, frame_rate);
      if (!spans.empty() && on - spans.back().second < config.min_off) {
        spans.back().second = off;
      } else {
        spans.emplace_back(on, off);
      }
    }
    for (const auto &[on, off] : spans) {
      if (off - on < config.min_on || off <= on) continue;
      out.add(Segment::from_bounds(on, off), label);
    }
  }
  return out;
}

Annotation windows_to_annotation(const std::string &recording_id,
                                 std::span<const Segment> windows,
                                 std::span<const std::string> labels) {
  if (windows.size() != labels.size())
    throw DataError("window/label count mismatch: " + std::to_string(windows.size()) + " vs " +
                    std::to_string(labels.size()));
  for (std::size_t i = 1; i < windows.size(); ++i) {
    if (windows[i] < windows[i - 1]) throw DataError("windows must be sorted");
  }
  std::vector<LabeledSegment> pieces;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Segment &w = windows[i];
    Millis start = w.onset();
    Millis end = w.end();
    if (i > 0 && windows[i - 1].end() > w.onset()) {
      const Segment &p = windows[i - 1];
      start = std::max(start, (p.onset() + p.end() + w.onset() + w.end()) / 4);
    }
    if (i + 1 < windows.size() && windows[i + 1].onset() < w.end()) {
      const Segment &n = windows[i + 1];
      end = std::min(end, (w.onset() + w.end() + n.onset() + n.end()) / 4);
    }
    if (end > start) pieces.push_back({Segment::from_bounds(start, end), labels[i]});
  }
  // Pieces are disjoint and ordered; join touching pieces with equal labels.
  std::vector<LabeledSegment> joined;
  for (auto &p : pieces) {
    if (!joined.empty() && joined.back().label == p.label &&
        joined.back().segment.end() == p.segment.onset()) {
      joined.back().segment = Segment::from_bounds(joined.back().segment.onset(), p.segment.end());
    } else {
      joined.push_back(std::move(p));
    }
  }
  return Annotation(recording_id, std::move(joined));
}

}  // namespace diarkit
