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

#ifndef DIARKIT_CLUSTERING_H_
#define DIARKIT_CLUSTERING_H_

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "diarkit/backend.h"

namespace diarkit {

struct AhcConfig {
  double threshold = 0.0;  // stop once the best average-linkage similarity drops below
  int min_clusters = 1;
  std::optional<int> max_clusters;

  void validate() const;
};

// Average-linkage agglomerative clustering. Merging continues while the best
// pair similarity is >= threshold or while there are more than max_clusters
// clusters, and never goes below min_clusters. Equal similarities resolve to
// the smallest (i, j) pair, where a cluster is indexed by its smallest member.
// Labels are 0-based in order of first appearance.
std::vector<int> ahc(const SimilarityMatrix &sim, const AhcConfig &config);

struct ForwardBackwardResult {
  Eigen::MatrixXd gamma;  // T x S state posteriors
  double log_evidence = 0.0;
  // Expected number of transitions into each state that went through the
  // "jump" branch, plus the initial-state posterior. Used for the prior update.
  Eigen::VectorXd prior_counts;
};

// Exact posteriors of the HMM whose initial distribution is pi and whose
// transitions are p(s'|s) = p_loop * [s == s'] + (1 - p_loop) * pi(s').
ForwardBackwardResult forward_backward(const Eigen::MatrixXd &log_emissions,
                                       const Eigen::VectorXd &pi, double p_loop);

struct VbxConfig {
  double p_loop = 0.9;
  double fa = 9.0;
  double fb = 4.0;
  int max_iters = 40;
  double elbo_tol = 1e-6;
  double drop_prior = 1e-3;

  void validate() const;
};

struct VbxState {
  Eigen::MatrixXd gamma;       // N x S
  Eigen::MatrixXd alpha;       // S x R posterior means of the speaker factors
  Eigen::MatrixXd lambda_inv;  // S x R posterior variances (diagonal)
  Eigen::VectorXd pi;          // S
  // ELBO after each iteration of the final pass (after the last pruning).
  std::vector<double> elbo_trace;
  // ELBO traces of earlier passes that ended with speakers being pruned.
  std::vector<std::vector<double>> pruned_passes;
  // For each surviving state, the index of the initial cluster it came from.
  std::vector<int> surviving_clusters;
  int iterations = 0;
};

struct VbxResult {
  std::vector<int> labels;  // relabelled 0-based by first appearance
  VbxState state;
};

// Variational Bayes HMM refinement of an initial clustering. x is N x R in
// the PLDA diagonal space and phi the between-class variances there.
VbxResult vbx_refine(const Eigen::MatrixXd &x, const Eigen::VectorXd &phi,
                     std::span<const int> init_labels, const VbxConfig &config);

// Renumbers labels 0, 1, ... in order of first appearance.
std::vector<int> relabel_by_first_appearance(std::span<const int> labels);

}  // namespace diarkit

#endif  // DIARKIT_CLUSTERING_H_
