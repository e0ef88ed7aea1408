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

// The bundled synthetic language-diarization fixture: five language classes,
// 5 s windows with a 1 s shift, a backend trained on held-out recordings.

#ifndef DIARKIT_TESTS_FIXTURE_H_
#define DIARKIT_TESTS_FIXTURE_H_

#include <vector>

#include "diarkit/embedstore.h"
#include "diarkit/pipeline.h"

namespace fixture {

struct Corpus {
  diarkit::EmbeddingSet embeddings;
  std::vector<diarkit::Annotation> references;
  diarkit::SpeechMap speech;
};

inline Corpus to_corpus(const std::vector<diarkit::SynthRecording> &recs) {
  Corpus c;
  std::vector<diarkit::EmbeddingSet> sets;
  for (const auto &r : recs) {
    sets.push_back(r.embeddings);
    c.references.push_back(r.reference);
    c.speech[r.reference.recording_id()] = r.speech;
  }
  c.embeddings = diarkit::concatenate(sets);
  return c;
}

inline diarkit::SynthConfig language_config() {
  diarkit::SynthConfig cfg;
  cfg.n_classes = 5;
  cfg.dim = 32;
  cfg.between_class_std = 10.0;
  cfg.within_class_std = 1.0;
  // Large session shifts keep within-recording scatter, after LDA and length
  // norm, near 1/fa of the PLDA within-class spread. Smaller shifts make VBx
  // at fa = 9 split single-language recordings on noise.
  cfg.session_std = 8.0;
  cfg.recording_seconds = 300.0;
  cfg.seed = 2024;
  cfg.label_prefix = "lang";
  return cfg;
}

// Held-out recordings for backend training (ids rec100 onwards).
inline Corpus language_train() {
  auto cfg = language_config();
  cfg.n_recordings = 10;
  cfg.first_recording = 100;
  return to_corpus(diarkit::synth_corpus(cfg));
}

inline Corpus language_test() {
  auto cfg = language_config();
  cfg.n_recordings = 3;
  return to_corpus(diarkit::synth_corpus(cfg));
}

}  // namespace fixture

#endif  // DIARKIT_TESTS_FIXTURE_H_
