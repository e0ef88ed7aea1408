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

// Reference loss kernels for diarization and separation training objectives:
// powerset cross-entropy, permutation-invariant BCE, mixture-invariant
// reconstruction loss and their weighted combination. All minimisations are
// exhaustive, which is exact and cheap for the small speaker counts involved.

#ifndef DIARKIT_LOSSES_H_
#define DIARKIT_LOSSES_H_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diarkit/common.h"

namespace diarkit {

// Classes are the speaker subsets of size <= max_overlap, ordered by size then
// lexicographically; class 0 is the empty set. Speakers are 0-based.
class PowersetSpace {
 public:
  // Throws ConfigError unless 1 <= max_overlap <= k_max.
  PowersetSpace(int k_max, int max_overlap);

  int k_max() const { return k_max_; }
  int max_overlap() const { return max_overlap_; }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  const std::vector<std::vector<int>> &classes() const { return classes_; }

  // Throws DataError if the active speaker count exceeds max_overlap.
  int encode(std::span<const int> multilabel) const;
  std::vector<int> decode(int index) const;

 private:
  int k_max_;
  int max_overlap_;
  std::vector<std::vector<int>> classes_;
  std::vector<int> index_of_mask_;
};

// A permutation perm maps prediction column j to reference column perm[j].
struct PermutedLoss {
  double loss = 0.0;
  std::vector<int> permutation;
};

// Mean over frames of -log p(encoded reference class), minimised over
// reference speaker permutations. pred_logprobs is T x num_classes with rows
// that are log-probability vectors; reference is T x k_max with 0/1 entries.
PermutedLoss powerset_ce(const Eigen::MatrixXd &pred_logprobs, const Eigen::MatrixXd &reference,
                         const PowersetSpace &space);

inline constexpr double kBceClip = 1e-7;

// Mean binary cross-entropy between pred (T x K probabilities) and the
// column-permuted reference, minimised over permutations. K <= 8.
PermutedLoss pit_loss(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &reference);

// Mean BCE for one fixed permutation; exposed for oracles and diagnostics.
double bce_under_permutation(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &reference,
                             std::span<const int> permutation);

// Two reference mixtures and M >= 2 estimated sources, all of length T.
struct MixtureOfMixtures {
  Eigen::MatrixXd mixtures;           // 2 x T
  Eigen::MatrixXd estimated_sources;  // M x T

  void validate() const;
  // The summed signal the separation model actually sees.
  Eigen::RowVectorXd mom() const { return mixtures.row(0) + mixtures.row(1); }
};

enum class MixitLossKind { kMse, kNegSnr };

MixitLossKind parse_mixit_kind(const std::string &name);
std::string to_string(MixitLossKind kind);

inline constexpr double kSnrEpsilon = 1e-8;

struct MixitResult {
  double loss = 0.0;
  // 2 x M, exactly one 1 per column.
  Eigen::MatrixXi assignment;
};

// Sum over the two mixtures of the reconstruction loss between each mixture
// and the sum of sources assigned to it, minimised over all 2^M assignments.
MixitResult mixit_loss(const MixtureOfMixtures &mom, MixitLossKind kind = MixitLossKind::kNegSnr);

// Loss of one assignment, given as a bitmask where bit m set sends source m
// to the second mixture.
double mixit_loss_for_mask(const MixtureOfMixtures &mom, MixitLossKind kind, unsigned mask);

struct PixitWeights {
  double lambda = 0.1;
  void validate() const;
};

inline constexpr double kCanonicalPixitLambda = 0.1;

// lambda * pit + (1 - lambda) * mixit; throws ConfigError if lambda is not in [0, 1].
double pixit_loss(double pit, double mixit, double lambda = kCanonicalPixitLambda);

}  // namespace diarkit

#endif  // DIARKIT_LOSSES_H_
