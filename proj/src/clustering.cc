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

#include "diarkit/clustering.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace diarkit {

void AhcConfig::validate() const {
  if (!std::isfinite(threshold)) throw ConfigError("AHC threshold must be finite");
  if (min_clusters < 1) throw ConfigError("min_clusters must be >= 1");
  if (max_clusters && *max_clusters < min_clusters)
    throw ConfigError("max_clusters must be >= min_clusters");
}

std::vector<int> relabel_by_first_appearance(std::span<const int> labels) {
  std::map<int, int> remap;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

std::vector<int> ahc(const SimilarityMatrix &sim, const AhcConfig &config) {
  config.validate();
  const auto n = sim.n();
  if (sim.values.cols() != n) throw DataError("similarity matrix must be square");
  if (n == 0) return {};

  Eigen::MatrixXd sums = sim.values;
  std::vector<double> size(n, 1.0);
  std::vector<bool> active(n, true);
  std::vector<Eigen::Index> root(n);
  for (Eigen::Index i = 0; i < n; ++i) root[i] = i;

  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<double> best_value(n, kNone);
  std::vector<Eigen::Index> best_partner(n, -1);
  auto linkage = [&](Eigen::Index a, Eigen::Index b) { return sums(a, b) / (size[a] * size[b]); };
  auto refresh = [&](Eigen::Index i) {
    best_value[i] = kNone;
    best_partner[i] = -1;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      const double v = linkage(i, j);
      if (best_partner[i] < 0 || v > best_value[i]) {
        best_value[i] = v;
        best_partner[i] = j;
      }
    }
  };
  for (Eigen::Index i = 0; i < n; ++i) refresh(i);

  Eigen::Index count = n;
  while (count > config.min_clusters) {
    Eigen::Index bi = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!active[i] || best_partner[i] < 0) continue;
      if (bi < 0 || best_value[i] > best_value[bi]) bi = i;
    }
    if (bi < 0) break;
    const bool over_limit = config.max_clusters && count > *config.max_clusters;
    if (!(best_value[bi] >= config.threshold) && !over_limit) break;

    const Eigen::Index i = bi;
    const Eigen::Index j = best_partner[bi];
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!active[k] || k == i || k == j) continue;
      sums(i, k) += sums(j, k);
      sums(k, i) = sums(i, k);
    }
    size[i] += size[j];
    active[j] = false;
    for (Eigen::Index p = 0; p < n; ++p) {
      if (root[p] == j) root[p] = i;
    }
    --count;

    refresh(i);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!active[k] || k == i) continue;
      if (best_partner[k] == i || best_partner[k] == j) {
        refresh(k);
      } else if (k < i) {
        const double v = linkage(k, i);
        if (best_partner[k] < 0 || v > best_value[k] ||
            (v == best_value[k] && i < best_partner[k])) {
          best_value[k] = v;
          best_partner[k] = i;
        }
      }
    }
  }

  std::vector<int> labels(n);
  for (Eigen::Index p = 0; p < n; ++p) labels[p] = static_cast<int>(root[p]);
  return relabel_by_first_appearance(labels);
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(const Eigen::VectorXd &v) {
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

ForwardBackwardResult forward_backward(const Eigen::MatrixXd &log_emissions,
                                       const Eigen::VectorXd &pi, double p_loop) {
  const auto T = log_emissions.rows();
  const auto S = log_emissions.cols();
  if (pi.size() != S) throw DataError("prior size does not match emission columns");
  if (!(p_loop >= 0.0 && p_loop < 1.0)) throw ConfigError("p_loop must lie in [0, 1)");
  if (!log_emissions.allFinite() || !pi.allFinite()) throw DataError("non-finite HMM inputs");

  ForwardBackwardResult out;
  out.gamma = Eigen::MatrixXd::Zero(T, S);
  out.prior_counts = Eigen::VectorXd::Zero(S);
  if (T == 0 || S == 0) return out;

  Eigen::VectorXd log_pi(S);
  for (Eigen::Index s = 0; s < S; ++s) log_pi(s) = safe_log(pi(s));
  const double log_loop = safe_log(p_loop);
  const double log_jump = std::log1p(-p_loop);

  Eigen::MatrixXd log_fw(T, S);
  Eigen::MatrixXd log_bw(T, S);
  log_fw.row(0) = (log_pi + log_emissions.row(0).transpose()).transpose();
  for (Eigen::Index t = 1; t < T; ++t) {
    const double total_prev = log_sum_exp(log_fw.row(t - 1).transpose());
    for (Eigen::Index s = 0; s < S; ++s) {
      log_fw(t, s) = log_emissions(t, s) + log_add(log_loop + log_fw(t - 1, s),
                                                   log_jump + log_pi(s) + total_prev);
    }
  }
  log_bw.row(T - 1).setZero();
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const Eigen::VectorXd next = (log_emissions.row(t + 1) + log_bw.row(t + 1)).transpose();
    const double jump_total = log_jump + log_sum_exp(log_pi + next);
    for (Eigen::Index s = 0; s < S; ++s) log_bw(t, s) = log_add(log_loop + next(s), jump_total);
  }
  out.log_evidence = log_sum_exp(log_fw.row(T - 1).transpose());

  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      out.gamma(t, s) = std::exp(log_fw(t, s) + log_bw(t, s) - out.log_evidence);
    }
    const double row = out.gamma.row(t).sum();
    if (row > 0) out.gamma.row(t) /= row;
  }

  out.prior_counts = out.gamma.row(0).transpose();
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    const double total = log_sum_exp(log_fw.row(t).transpose());
    for (Eigen::Index s = 0; s < S; ++s) {
      out.prior_counts(s) += std::exp(total + log_jump + log_pi(s) + log_emissions(t + 1, s) +
                                      log_bw(t + 1, s) - out.log_evidence);
    }
  }
  return out;
}

void VbxConfig::validate() const {
  if (!(p_loop >= 0.0 && p_loop < 1.0)) throw ConfigError("p_loop must lie in [0, 1)");
  if (!(fa > 0.0) || !(fb > 0.0)) throw ConfigError("fa and fb must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(elbo_tol >= 0.0)) throw ConfigError("elbo_tol must be >= 0");
  if (!(drop_prior >= 0.0 && drop_prior < 1.0)) throw ConfigError("drop_prior must lie in [0, 1)");
}

VbxResult vbx_refine(const Eigen::MatrixXd &x, const Eigen::VectorXd &phi,
                     std::span<const int> init_labels, const VbxConfig &config) {
  config.validate();
  const auto N = x.rows();
  const auto R = x.cols();
  if (phi.size() != R) throw DataError("phi size does not match feature dimension");
  if (static_cast<Eigen::Index>(init_labels.size()) != N)
    throw DataError("initial label count does not match number of frames");
  if ((phi.array() <= 0.0).any()) throw DataError("phi must be positive");
  VbxResult result;
  if (N == 0) return result;

  // States are the distinct initial labels in order of first appearance, so
  // empty initial clusters never appear.
  const std::vector<int> init = relabel_by_first_appearance(init_labels);
  int S = *std::max_element(init.begin(), init.end()) + 1;
  std::vector<int> origin(S);
  {
    std::map<int, int> seen;
    for (std::size_t t = 0; t < init.size(); ++t) seen.try_emplace(init[t], init_labels[t]);
    for (const auto &[state, label] : seen) origin[state] = label;
  }

  VbxState &st = result.state;
  st.gamma = Eigen::MatrixXd::Zero(N, S);
  for (Eigen::Index t = 0; t < N; ++t) st.gamma(t, init[t]) = 1.0;
  st.pi = Eigen::VectorXd::Constant(S, 1.0 / S);

  const Eigen::ArrayXd v = phi.array().sqrt();
  const double ratio = config.fa / config.fb;
  const Eigen::VectorXd g =
      -0.5 * x.rowwise().squaredNorm().array() - 0.5 * static_cast<double>(R) *
                                                     std::log(2.0 * std::numbers::pi);

  while (true) {
    std::vector<double> trace;
    bool pruned = false;
    for (int iter = 0; iter < config.max_iters; ++iter) {
      ++st.iterations;
      // q(Y): per-state Gaussian posteriors with diagonal precision.
      const Eigen::VectorXd counts = st.gamma.colwise().sum().transpose();
      st.lambda_inv.resize(S, R);
      for (int s = 0; s < S; ++s) {
        st.lambda_inv.row(s) = (1.0 + ratio * counts(s) * phi.array()).inverse().transpose();
      }
      const Eigen::MatrixXd stats = st.gamma.transpose() * x;  // S x R
      st.alpha = ratio * ((st.lambda_inv.array() * stats.array()).rowwise() * v.transpose()).matrix();

      // Expected log-likelihoods scaled by fa.
      const Eigen::MatrixXd va = (st.alpha.array().rowwise() * v.transpose()).matrix();  // S x R
      const Eigen::VectorXd quad =
          0.5 * ((st.lambda_inv.array() + st.alpha.array().square()).rowwise() *
                 phi.array().transpose())
                    .rowwise()
                    .sum();
      Eigen::MatrixXd log_p = x * va.transpose();
      log_p.rowwise() -= quad.transpose();
      log_p.colwise() += g;
      log_p *= config.fa;

      const auto fb = forward_backward(log_p, st.pi, config.p_loop);
      st.gamma = fb.gamma;
      const double kl = 0.5 * (st.lambda_inv.array().log() - st.lambda_inv.array() -
                               st.alpha.array().square() + 1.0)
                                  .sum();
      const double elbo = fb.log_evidence + config.fb * kl;
      st.pi = fb.prior_counts / fb.prior_counts.sum();
      trace.push_back(elbo);

      if ((st.pi.array() < config.drop_prior).any() && S > 1) {
        pruned = true;
        break;
      }
      if (trace.size() > 1) {
        const double prev = trace[trace.size() - 2];
        if (std::abs(elbo - prev) <= config.elbo_tol * std::abs(elbo)) break;
      }
    }
    if (!pruned) {
      st.elbo_trace = std::move(trace);
      break;
    }

    st.pruned_passes.push_back(std::move(trace));
    std::vector<int> keep;
    for (int s = 0; s < S; ++s) {
      if (st.pi(s) >= config.drop_prior) keep.push_back(s);
    }
    if (keep.empty()) {
      Eigen::Index best = 0;
      st.pi.maxCoeff(&best);
      keep.push_back(static_cast<int>(best));
    }
    Eigen::MatrixXd gamma(N, keep.size());
    Eigen::VectorXd pi(keep.size());
    std::vector<int> new_origin;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      gamma.col(k) = st.gamma.col(keep[k]);
      pi(k) = st.pi(keep[k]);
      new_origin.push_back(origin[keep[k]]);
    }
    for (Eigen::Index t = 0; t < N; ++t) {
      const double row = gamma.row(t).sum();
      if (row > 0) {
        gamma.row(t) /= row;
      } else {
        gamma.row(t).setConstant(1.0 / static_cast<double>(keep.size()));
      }
    }
    st.gamma = std::move(gamma);
    st.pi = pi / pi.sum();
    origin = std::move(new_origin);
    S = static_cast<int>(keep.size());
  }

  st.surviving_clusters = origin;
  std::vector<int> labels(N);
  for (Eigen::Index t = 0; t < N; ++t) {
    Eigen::Index arg = 0;
    st.gamma.row(t).maxCoeff(&arg);
    labels[t] = static_cast<int>(arg);
  }
  result.labels = relabel_by_first_appearance(labels);
  return result;
}

}  // namespace diarkit
