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

#include "diarkit/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace diarkit {

PowersetSpace::PowersetSpace(int k_max, int max_overlap) : k_max_(k_max), max_overlap_(max_overlap) {
  if (k_max < 1 || k_max > 16) throw ConfigError("k_max must lie in [1, 16]");
  if (max_overlap < 1 || max_overlap > k_max)
    throw ConfigError("max_overlap must lie in [1, k_max]");
  index_of_mask_.assign(std::size_t{1} << k_max, -1);
  for (int size = 0; size <= max_overlap; ++size) {
    // Lexicographic combinations of `size` speakers.
    std::vector<int> combo(size);
    std::iota(combo.begin(), combo.end(), 0);
    while (true) {
      unsigned mask = 0;
      for (int s : combo) mask |= 1u << s;
      index_of_mask_[mask] = static_cast<int>(classes_.size());
      classes_.push_back(combo);
      int i = size - 1;
      while (i >= 0 && combo[i] == k_max - size + i) --i;
      if (i < 0) break;
      ++combo[i];
      for (int j = i + 1; j < size; ++j) combo[j] = combo[j - 1] + 1;
    }
  }
}

int PowersetSpace::encode(std::span<const int> multilabel) const {
  if (static_cast<int>(multilabel.size()) != k_max_)
    throw DataError("multilabel vector has " + std::to_string(multilabel.size()) +
                    " entries, expected " + std::to_string(k_max_));
  unsigned mask = 0;
  for (int s = 0; s < k_max_; ++s) {
    if (multilabel[s] != 0 && multilabel[s] != 1) throw DataError("multilabel entries must be 0/1");
    if (multilabel[s]) mask |= 1u << s;
  }
  const int index = index_of_mask_[mask];
  if (index < 0)
    throw DataError("frame has more than " + std::to_string(max_overlap_) + " active speakers");
  return index;
}

std::vector<int> PowersetSpace::decode(int index) const {
  if (index < 0 || index >= num_classes()) throw DataError("powerset class index out of range");
  std::vector<int> out(k_max_, 0);
  for (int s : classes_[index]) out[s] = 1;
  return out;
}

namespace {

void check_permutation_size(Eigen::Index k) {
  if (k < 1 || k > 8) throw DataError("exhaustive permutation search supports 1..8 columns");
}

// Reads a 0/1 row of the reference after permuting columns.
std::vector<int> permuted_row(const Eigen::MatrixXd &ref, Eigen::Index t, std::span<const int> perm) {
  std::vector<int> row(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const double v = ref(t, perm[j]);
    if (v != 0.0 && v != 1.0) throw DataError("reference activity must be 0/1");
    row[j] = v != 0.0;
  }
  return row;
}

}  // namespace

PermutedLoss powerset_ce(const Eigen::MatrixXd &pred_logprobs, const Eigen::MatrixXd &reference,
                         const PowersetSpace &space) {
  if (pred_logprobs.cols() != space.num_classes())
    throw DataError("prediction has " + std::to_string(pred_logprobs.cols()) +
                    " columns, powerset has " + std::to_string(space.num_classes()) + " classes");
  if (reference.cols() != space.k_max() || reference.rows() != pred_logprobs.rows())
    throw DataError("reference shape does not match prediction");
  if (pred_logprobs.rows() == 0) throw DataError("empty prediction");
  check_permutation_size(space.k_max());
  for (Eigen::Index t = 0; t < pred_logprobs.rows(); ++t) {
    const double m = pred_logprobs.row(t).maxCoeff();
    const double lse = m + std::log((pred_logprobs.row(t).array() - m).exp().sum());
    if (!std::isfinite(lse) || std::abs(lse) > 1e-6)
      throw DataError("prediction row " + std::to_string(t) + " is not a log-probability vector");
  }

  std::vector<int> perm(space.k_max());
  std::iota(perm.begin(), perm.end(), 0);
  PermutedLoss best{std::numeric_limits<double>::infinity(), perm};
  const double T = static_cast<double>(pred_logprobs.rows());
  do {
    double total = 0.0;
    for (Eigen::Index t = 0; t < pred_logprobs.rows(); ++t) {
      const auto row = permuted_row(reference, t, perm);
      total -= pred_logprobs(t, space.encode(row));
    }
    const double loss = total / T;
    if (loss < best.loss) best = {loss, perm};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double bce_under_permutation(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &reference,
                             std::span<const int> permutation) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const double p = std::clamp(pred(t, j), kBceClip, 1.0 - kBceClip);
      const double y = reference(t, permutation[j]);
      total -= y * std::log(p) + (1.0 - y) * std::log1p(-p);
    }
  }
  return total / static_cast<double>(pred.size());
}

PermutedLoss pit_loss(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &reference) {
  if (pred.rows() != reference.rows() || pred.cols() != reference.cols())
    throw DataError("PIT prediction and reference shapes differ");
  if (pred.size() == 0) throw DataError("empty PIT input");
  check_permutation_size(pred.cols());
  std::vector<int> perm(pred.cols());
  std::iota(perm.begin(), perm.end(), 0);
  PermutedLoss best{std::numeric_limits<double>::infinity(), perm};
  do {
    const double loss = bce_under_permutation(pred, reference, perm);
    if (loss < best.loss) best = {loss, perm};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void MixtureOfMixtures::validate() const {
  if (mixtures.rows() != 2) throw DataError("a mixture of mixtures needs exactly 2 mixtures");
  if (estimated_sources.rows() < 2) throw DataError("MixIT needs at least 2 estimated sources");
  if (estimated_sources.rows() > 8) throw DataError("MixIT supports at most 8 sources");
  if (estimated_sources.cols() != mixtures.cols())
    throw DataError("sources and mixtures differ in length");
  if (mixtures.cols() == 0) throw DataError("empty signals");
}

MixitLossKind parse_mixit_kind(const std::string &name) {
  if (name == "mse") return MixitLossKind::kMse;
  if (name == "neg_snr") return MixitLossKind::kNegSnr;
  throw ConfigError("unknown MixIT loss '" + name + "' (expected mse or neg_snr)");
}

std::string to_string(MixitLossKind kind) {
  return kind == MixitLossKind::kMse ? "mse" : "neg_snr";
}

double mixit_loss_for_mask(const MixtureOfMixtures &mom, MixitLossKind kind, unsigned mask) {
  const Eigen::Index T = mom.mixtures.cols();
  Eigen::MatrixXd estimate = Eigen::MatrixXd::Zero(2, T);
  for (Eigen::Index m = 0; m < mom.estimated_sources.rows(); ++m) {
    estimate.row((mask >> m) & 1u) += mom.estimated_sources.row(m);
  }
  double loss = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double err = (mom.mixtures.row(k) - estimate.row(k)).squaredNorm();
    if (kind == MixitLossKind::kMse) {
      loss += err / static_cast<double>(T);
    } else {
      const double signal = mom.mixtures.row(k).squaredNorm();
      loss += -10.0 * std::log10(signal / (err + kSnrEpsilon));
    }
  }
  return loss;
}

MixitResult mixit_loss(const MixtureOfMixtures &mom, MixitLossKind kind) {
  mom.validate();
  const auto M = static_cast<unsigned>(mom.estimated_sources.rows());
  double best = std::numeric_limits<double>::infinity();
  unsigned best_mask = 0;
  for (unsigned mask = 0; mask < (1u << M); ++mask) {
    const double loss = mixit_loss_for_mask(mom, kind, mask);
    if (loss < best) {
      best = loss;
      best_mask = mask;
    }
  }
  MixitResult out{best, Eigen::MatrixXi::Zero(2, M)};
  for (unsigned m = 0; m < M; ++m) out.assignment((best_mask >> m) & 1u, m) = 1;
  return out;
}

void PixitWeights::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("PixIT lambda must lie in [0, 1]");
}

double pixit_loss(double pit, double mixit, double lambda) {
  PixitWeights{lambda}.validate();
  return lambda * pit + (1.0 - lambda) * mixit;
}

}  // namespace diarkit
