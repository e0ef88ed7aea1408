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

// End-to-end orchestration: VAD segments and window embeddings in, RTTM out,
// with per-stage artifacts and a digest manifest for reproducibility.

#ifndef DIARKIT_PIPELINE_H_
#define DIARKIT_PIPELINE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diarkit/backend.h"
#include "diarkit/clustering.h"
#include "diarkit/embedstore.h"
#include "diarkit/timeline.h"
#include "diarkit/windowing.h"

namespace diarkit {

inline constexpr const char *kToolVersion = "1.0.0";

enum class Track { kSpeaker, kLanguage };
enum class BackendKind { kCosine, kPlda };

struct PipelineConfig {
  Track track = Track::kLanguage;
  WindowPlan window;
  BackendKind backend = BackendKind::kPlda;
  int lda_dim = kCanonicalLdaDim;
  AhcConfig ahc;
  std::optional<VbxConfig> vbx = VbxConfig{};
  std::vector<double> ensemble_weights;
  std::uint64_t seed = 0;
  int threads = 1;

  // Throws ConfigError for inconsistent settings.
  void validate() const;
  nlohmann::json to_json() const;
};

// Defaults for a track: language uses PLDA + VBx, speaker uses cosine and no VBx.
PipelineConfig default_config(Track track);

// Reads the TOML-style config file. Unknown keys are rejected.
PipelineConfig parse_pipeline_config(std::string_view text);

// A minimal reader for the TOML subset used by config files: [tables],
// key = value with strings, numbers, booleans and flat arrays, # comments.
// Keys come back as "table.key".
std::map<std::string, nlohmann::json> parse_toml(std::string_view text);

// Speech segments per recording (VAD output). Stored in UEM syntax.
using SpeechMap = std::map<std::string, std::vector<Segment>>;
SpeechMap speech_from_uems(const std::vector<Uem> &uems);
std::vector<Uem> speech_to_uems(const SpeechMap &speech);

struct RecordingResult {
  std::string recording_id;
  std::vector<Segment> windows;
  SimilarityMatrix similarity;
  std::vector<int> ahc_labels;
  std::optional<VbxResult> vbx;
  Annotation ahc_annotation;
  Annotation final_annotation;
};

struct RunManifest {
  std::string config_sha256;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::string> output_digests;
  std::map<std::string, double> timings_ms;
  std::string tool_version = kToolVersion;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json &j);
};

struct PipelineOutput {
  std::vector<RecordingResult> recordings;  // ordered by recording id
  std::vector<Annotation> final_annotations;
  RunManifest manifest;
  std::vector<std::string> warnings;
};

// Embedding rows (stream 0) of each recording must match, in order, the
// windows derived from its speech segments; the first mismatch is reported.
// A PLDA model is required for the plda backend and for VBx. When run_dir is
// given, stage artifacts and manifest.json are written there.
PipelineOutput run_pipeline(const PipelineConfig &config, const SpeechMap &speech,
                            const EmbeddingSet &embeddings, const std::optional<PldaModel> &model,
                            const std::optional<std::string> &run_dir = std::nullopt);

// Recomputes digests of the artifacts listed in run_dir/manifest.json and
// returns the names of those that no longer match.
std::vector<std::string> verify_manifest(const std::string &run_dir);

std::string sha256_hex(std::string_view bytes);

// Worker count from DIARKIT_THREADS (default 1), capped at `cap`.
int worker_threads(int cap);

}  // namespace diarkit

#endif  // DIARKIT_PIPELINE_H_
