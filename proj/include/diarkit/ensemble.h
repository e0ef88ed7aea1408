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

// Overlap-aware combination of diarization hypotheses for one recording:
// greedy cross-hypothesis label mapping followed by weighted voting.

#ifndef DIARKIT_ENSEMBLE_H_
#define DIARKIT_ENSEMBLE_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "diarkit/timeline.h"

namespace diarkit {

// For each hypothesis, local label -> global label.
using LabelMapping = std::vector<std::map<std::string, std::string>>;

// Pairs (hyp i, label a) and (hyp j, label b), i != j, are visited by
// decreasing overlap duration, ties in (i, a, j, b) order. Each visit unions
// the two label groups unless the union would hold two labels of one
// hypothesis. A group is named after its member from the lowest-index
// hypothesis; clashes get a numeric suffix.
LabelMapping map_labels(std::span<const Annotation> hypotheses);

std::vector<Annotation> apply_mapping(std::span<const Annotation> hypotheses,
                                      const LabelMapping &mapping);

// Hypotheses must already use global labels. Each boundary-delimited region
// outputs the round-half-up(weighted mean speaker count) labels with the
// highest total weight (lexicographic on ties).
Annotation dover_lap(std::span<const Annotation> hypotheses, std::span<const double> weights);

std::vector<double> uniform_weights(std::size_t n);
// w_k proportional to 1 / rank_k (ranks are 1-based, best first), normalised.
std::vector<double> rank_weights(std::span<const int> ranks);
// Validates positivity and rescales to sum to 1.
std::vector<double> normalize_weights(std::span<const double> weights);

// map_labels + dover_lap per recording. Every input must cover the same
// recording ids.
std::vector<Annotation> run_ensemble(std::span<const std::vector<Annotation>> systems,
                                     std::span<const double> weights);

}  // namespace diarkit

#endif  // DIARKIT_ENSEMBLE_H_
