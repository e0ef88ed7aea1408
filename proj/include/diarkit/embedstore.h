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

// Embedding sets, the `.dkeb` container and a synthetic recording generator.
//
// `.dkeb` layout (all integers little-endian):
//   "DKEB" | u16 version = 1 | u32 dim | u32 N | N*dim float32, row-major |
//   u64 meta length | UTF-8 JSON {"rows": [{recording_id, onset_ms,
//   duration_ms, stream, label?}, ...]}

#ifndef DIARKIT_EMBEDSTORE_H_
#define DIARKIT_EMBEDSTORE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diarkit/timeline.h"
#include "diarkit/windowing.h"

namespace diarkit {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct RowMeta {
  std::string recording_id;
  Segment window;
  int stream = 0;  // index of the separated source the row came from
  std::optional<std::string> true_label;

  friend bool operator==(const RowMeta &, const RowMeta &) = default;
};

class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  // Throws DataError on non-finite values or a meta/row count mismatch.
  EmbeddingSet(RowMatrixF rows, std::vector<RowMeta> meta);

  // Wraps a plain matrix; row t gets the window [t ms, t+1 ms) of recording "matrix".
  static EmbeddingSet from_matrix(const Eigen::MatrixXd &values);

  int dim() const { return static_cast<int>(rows_.cols()); }
  std::size_t size() const { return meta_.size(); }
  const RowMatrixF &rows() const { return rows_; }
  const std::vector<RowMeta> &meta() const { return meta_; }
  Eigen::MatrixXd as_double() const { return rows_.cast<double>(); }

  // Rows belonging to one recording, in file order.
  EmbeddingSet select_recording(const std::string &recording_id) const;
  EmbeddingSet select(std::span<const std::size_t> indices) const;
  // Distinct recording ids in order of first appearance.
  std::vector<std::string> recording_ids() const;
  // true_label of every row; throws DataError if any is missing.
  std::vector<std::string> true_labels() const;

  friend bool operator==(const EmbeddingSet &a, const EmbeddingSet &b) {
    return a.rows_.rows() == b.rows_.rows() && a.rows_.cols() == b.rows_.cols() &&
           std::equal(a.rows_.data(), a.rows_.data() + a.rows_.size(), b.rows_.data()) &&
           a.meta_ == b.meta_;
  }

 private:
  RowMatrixF rows_;
  std::vector<RowMeta> meta_;
};

std::string emb_serialize(const EmbeddingSet &set);
EmbeddingSet emb_deserialize(std::string_view bytes);
void emb_write(const EmbeddingSet &set, const std::string &path);
EmbeddingSet emb_read(const std::string &path);

// One row per distinct label, in ascending label order; each row is the mean
// of its members.
EmbeddingSet mean_by_cluster(const EmbeddingSet &set, std::span<const int> labels);

struct SynthConfig {
  int n_recordings = 1;
  int first_recording = 0;       // recordings are numbered from here
  int n_classes = 5;             // size of the class (speaker/language) inventory
  int classes_per_recording = 0; // 0 means all classes
  double recording_seconds = 300.0;
  double turn_log_mean = 3.0;    // lognormal turn length in seconds
  double turn_log_std = 0.4;
  double pause_probability = 0.2;
  double pause_log_mean = 0.0;
  double pause_log_std = 0.5;
  double between_class_std = 10.0;
  double within_class_std = 1.0;
  double offset_std = 1.0;       // global mean shared by all classes
  // Recording-level shift of each class mean. Windows of one recording then
  // scatter less than the within-class spread seen across recordings.
  double session_std = 0.0;
  int dim = 32;
  std::uint64_t seed = 0;
  std::string label_prefix = "lang";
  WindowPlan window;

  void validate() const;
};

struct SynthRecording {
  EmbeddingSet embeddings;
  Annotation reference;
  std::vector<Segment> speech;
};

// Class means depend only on the seed, so recordings generated with different
// first_recording values share one class inventory.
SynthRecording synth_recording(const SynthConfig &config, int index);
std::vector<SynthRecording> synth_corpus(const SynthConfig &config);

// Labeled i.i.d. draws from the two-covariance model: class means
// ~ N(0, between_std^2 I), samples ~ N(mean, within_std^2 I).
EmbeddingSet synth_labeled_set(int n_classes, int per_class, double between_std,
                               double within_std, int dim, std::uint64_t seed);
// The class means (n_classes x dim) that synth_labeled_set draws for the
// same arguments.
Eigen::MatrixXd synth_labeled_means(int n_classes, double between_std, int dim,
                                    std::uint64_t seed);

EmbeddingSet concatenate(std::span<const EmbeddingSet> sets);

}  // namespace diarkit

#endif  // DIARKIT_EMBEDSTORE_H_
