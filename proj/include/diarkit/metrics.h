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

// Diarization error rate with optimal one-to-one label mapping, corpus
// aggregation and recording-level bootstrap confidence intervals.

#ifndef DIARKIT_METRICS_H_
#define DIARKIT_METRICS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diarkit/timeline.h"

namespace diarkit {

struct DerComponents {
  std::string recording_id;
  Millis missed = 0;
  Millis false_alarm = 0;
  Millis confusion = 0;
  Millis total_ref = 0;

  Millis error() const { return missed + false_alarm + confusion; }
  // Empty when total_ref is 0.
  std::optional<double> der() const;
};

struct DerReport {
  DerComponents totals;
  // hypothesis label -> reference label
  std::map<std::string, std::string> mapping;
  std::vector<DerComponents> per_recording;

  double missed_seconds() const { return millis_to_seconds(totals.missed); }
  double false_alarm_seconds() const { return millis_to_seconds(totals.false_alarm); }
  double confusion_seconds() const { return millis_to_seconds(totals.confusion); }
  double total_ref_seconds() const { return millis_to_seconds(totals.total_ref); }
  std::optional<double> der() const { return totals.der(); }
};

struct DerOptions {
  Millis collar = 0;           // excluded on each side of every reference boundary
  bool score_overlap = true;   // false drops regions with 2+ reference speakers
};

// Scores one recording. Without a UEM the whole span [0, max end] is scored.
DerReport der(const Annotation &reference, const Annotation &hypothesis,
              const std::optional<Uem> &uem = std::nullopt, const DerOptions &options = {});

// Time-weighted corpus DER: components are summed and divided once. The
// mapping field is left empty since it is per recording.
DerReport der_corpus(std::span<const std::pair<Annotation, Annotation>> pairs,
                     const std::map<std::string, Uem> &uems = {}, const DerOptions &options = {});

// Maximum-weight one-to-one assignment of rows to columns. Returns for each
// row the assigned column or -1. Exact (Hungarian method).
std::vector<int> map_optimal(const Eigen::MatrixXd &weights);
std::vector<int> map_optimal(const std::vector<std::vector<Millis>> &weights);

struct CiReport {
  double point = 0.0;
  double low = 0.0;
  double high = 0.0;
  int n_bootstrap = 0;
  std::uint64_t seed = 0;
  double level = 0.95;
};

// Percentile bootstrap over recordings; each resample b draws its own RNG
// stream from (seed, b), so the result does not depend on thread scheduling.
CiReport bootstrap_ci(std::span<const DerComponents> per_recording, int n_bootstrap = 1000,
                      std::uint64_t seed = 0, double level = 0.95, int threads = 1);

// "28.2 (25.6-33.0)", percentages with one decimal.
std::string format_ci(const CiReport &ci);

// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace diarkit

#endif  // DIARKIT_METRICS_H_
