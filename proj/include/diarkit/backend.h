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

// Embedding scoring back-end: centering, LDA, length normalisation,
// two-covariance PLDA and pairwise similarity matrices.

#ifndef DIARKIT_BACKEND_H_
#define DIARKIT_BACKEND_H_

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "diarkit/common.h"

namespace diarkit {

// Throws DataError for a zero vector.
Eigen::VectorXd length_normalize(const Eigen::VectorXd &v);

inline constexpr double kRidge = 1e-6;
inline constexpr double kPhiFloor = 1e-8;
inline constexpr int kCanonicalLdaDim = 150;

struct LdaResult {
  Eigen::VectorXd mean;     // global training mean
  Eigen::MatrixXd basis;    // dim x effective_dim, Sw-orthonormal columns
  Eigen::VectorXd eigenvalues;
  int effective_dim = 0;
  std::vector<std::string> warnings;
};

// rows: N x dim samples. The projection keeps min(target_dim, C - 1, dim)
// leading generalized eigenvectors of (Sb, Sw) and warns when that is less
// than target_dim.
LdaResult train_lda(const Eigen::MatrixXd &rows, std::span<const std::string> labels,
                    int target_dim);

struct PldaModel {
  // Front end: x -> basis^T (x - mu), optionally length-normalized.
  Eigen::VectorXd mu;
  Eigen::MatrixXd lda_basis;
  bool length_norm = true;
  // Two-covariance model in the projected space.
  Eigen::VectorXd plda_mean;
  Eigen::MatrixXd between;  // B
  Eigen::MatrixXd within;   // W, ridge already applied
  // T with T^T W T = I and T^T B T = diag(phi); columns with phi <= kPhiFloor dropped.
  Eigen::MatrixXd diag_transform;
  Eigen::VectorXd phi;
  std::vector<std::string> warnings;

  int input_dim() const { return static_cast<int>(mu.size()); }
  int lda_dim() const { return static_cast<int>(lda_basis.cols()); }
  int plda_dim() const { return static_cast<int>(phi.size()); }

  Eigen::VectorXd project(const Eigen::VectorXd &raw) const;
  // Raw embedding to the diagonal space consumed by VBx.
  Eigen::VectorXd diagonalize(const Eigen::VectorXd &raw) const;
  // Row-wise diagonalize for an N x input_dim matrix.
  Eigen::MatrixXd diagonalize_rows(const Eigen::MatrixXd &raw) const;
};

// Closed-form two-covariance estimate on already projected inputs. The
// returned model has an identity front end without length normalisation.
// Singleton classes are excluded from W but contribute to B.
PldaModel train_plda(const Eigen::MatrixXd &projected, std::span<const std::string> labels);

// Centering + LDA + length normalisation + PLDA, as used for language embeddings.
PldaModel train_backend(const Eigen::MatrixXd &rows, std::span<const std::string> labels,
                        int lda_dim = kCanonicalLdaDim);

// Same-speaker vs different-speaker log-likelihood ratio of two raw embeddings.
double plda_llr(const PldaModel &model, const Eigen::VectorXd &e1, const Eigen::VectorXd &e2);
// The same score for two vectors already in the diagonal space.
double plda_llr_diagonal(const Eigen::VectorXd &phi, const Eigen::VectorXd &x1,
                         const Eigen::VectorXd &x2);

struct CosineBackend {};
using Scorer = std::variant<CosineBackend, PldaModel>;

double cosine_similarity(const Eigen::VectorXd &a, const Eigen::VectorXd &b);

struct SimilarityMatrix {
  Eigen::MatrixXd values;
  Eigen::Index n() const { return values.rows(); }
};

// Pairwise scores of the rows of an N x dim matrix; the diagonal is filled
// with the self-score but consumers ignore it.
SimilarityMatrix similarity_matrix(const Scorer &scorer, const Eigen::MatrixXd &rows);

// JSON header plus a float32 little-endian sidecar next to it (`<stem>.bin`).
void save_plda(const PldaModel &model, const std::string &json_path);
PldaModel load_plda(const std::string &json_path);

}  // namespace diarkit

#endif  // DIARKIT_BACKEND_H_
