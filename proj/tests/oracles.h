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

// Brute-force reference implementations used by the unit and acceptance
// tests. Deliberately naive: enumeration over permutations, assignments,
// injections and HMM paths, and millisecond-grid sweeps.

#ifndef DIARKIT_TESTS_ORACLES_H_
#define DIARKIT_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diarkit/timeline.h"

namespace oracle {

// Calls fn(perm) for every permutation of 0..n-1.
inline void for_each_permutation(int n, const std::function<void(const std::vector<int> &)> &fn) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    fn(p);
  } while (std::next_permutation(p.begin(), p.end()));
}

// Mean BCE with prediction column j compared against reference column perm[j].
inline double bce(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &ref, const std::vector<int> &perm) {
  double sum = 0.0;
  for (Eigen::Index t = 0; t < pred.rows(); ++t)
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const double p = std::min(std::max(pred(t, j), 1e-7), 1.0 - 1e-7);
      const double y = ref(t, perm[j]);
      sum += -(y * std::log(p) + (1 - y) * std::log(1 - p));
    }
  return sum / static_cast<double>(pred.rows() * pred.cols());
}

inline double pit_min(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &ref) {
  double best = std::numeric_limits<double>::infinity();
  for_each_permutation(static_cast<int>(pred.cols()),
                       [&](const std::vector<int> &p) { best = std::min(best, bce(pred, ref, p)); });
  return best;
}

// Powerset classes listed independently: all subsets of size <= max_overlap
// ordered by (size, lexicographic).
inline std::vector<std::vector<int>> powerset_classes(int k, int max_overlap) {
  std::vector<std::vector<int>> all;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::vector<int> s;
    for (int b = 0; b < k; ++b)
      if (mask & (1u << b)) s.push_back(b);
    if (static_cast<int>(s.size()) <= max_overlap) all.push_back(s);
  }
  std::sort(all.begin(), all.end(), [](const auto &a, const auto &b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return all;
}

inline double powerset_min(const Eigen::MatrixXd &logp, const Eigen::MatrixXd &ref, int max_overlap) {
  const int k = static_cast<int>(ref.cols());
  const auto classes = powerset_classes(k, max_overlap);
  double best = std::numeric_limits<double>::infinity();
  for_each_permutation(k, [&](const std::vector<int> &perm) {
    double total = 0.0;
    for (Eigen::Index t = 0; t < ref.rows(); ++t) {
      std::vector<int> active;
      for (int j = 0; j < k; ++j)
        if (ref(t, perm[j]) > 0.5) active.push_back(j);
      const auto it = std::find(classes.begin(), classes.end(), active);
      total -= logp(t, it - classes.begin());
    }
    best = std::min(best, total / static_cast<double>(ref.rows()));
  });
  return best;
}

// Enumerates every 2 x M 0/1 matrix with one 1 per column.
inline double mixit_min(const Eigen::MatrixXd &mix, const Eigen::MatrixXd &src, bool mse) {
  const int M = static_cast<int>(src.rows());
  const Eigen::Index T = mix.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> to(M, 0);
  while (true) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, M);
    for (int m = 0; m < M; ++m) a(to[m], m) = 1.0;
    const Eigen::MatrixXd est = a * src;
    double loss = 0.0;
    for (int r = 0; r < 2; ++r) {
      const double err = (mix.row(r) - est.row(r)).squaredNorm();
      loss += mse ? err / static_cast<double>(T)
                  : -10.0 * std::log10(mix.row(r).squaredNorm() / (err + 1e-8));
    }
    best = std::min(best, loss);
    int m = 0;
    while (m < M && to[m] == 1) to[m++] = 0;
    if (m == M) break;
    to[m] = 1;
  }
  return best;
}

// Maximum total weight over all injective partial maps rows -> cols.
inline double best_injection(const std::vector<std::vector<double>> &w) {
  const int R = static_cast<int>(w.size());
  const int H = R ? static_cast<int>(w[0].size()) : 0;
  double best = 0.0;
  std::vector<bool> used(H, false);
  std::function<void(int, double)> rec = [&](int r, double acc) {
    if (r == R) {
      best = std::max(best, acc);
      return;
    }
    rec(r + 1, acc);
    for (int h = 0; h < H; ++h) {
      if (used[h]) continue;
      used[h] = true;
      rec(r + 1, acc + w[r][h]);
      used[h] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

struct DerBrute {
  std::int64_t missed = 0, false_alarm = 0, confusion = 0, total_ref = 0;
  std::int64_t error() const { return missed + false_alarm + confusion; }
};

// Millisecond-by-millisecond scoring with exhaustive speaker mapping. No
// collar, no UEM, overlap scored.
inline DerBrute der_brute(const diarkit::Annotation &ref, const diarkit::Annotation &hyp) {
  const auto rl = ref.labels();
  const auto hl = hyp.labels();
  const std::int64_t end = std::max(ref.max_end(), hyp.max_end());
  std::vector<std::vector<std::uint8_t>> ra(rl.size(), std::vector<std::uint8_t>(end, 0));
  std::vector<std::vector<std::uint8_t>> ha(hl.size(), std::vector<std::uint8_t>(end, 0));
  auto fill = [](const diarkit::Annotation &a, const std::vector<std::string> &labels, auto &act) {
    for (const auto &e : a.entries()) {
      const auto k = std::find(labels.begin(), labels.end(), e.label) - labels.begin();
      for (std::int64_t t = e.segment.onset(); t < e.segment.end(); ++t) act[k][t] = 1;
    }
  };
  fill(ref, rl, ra);
  fill(hyp, hl, ha);
  std::vector<std::vector<double>> co(rl.size(), std::vector<double>(hl.size(), 0.0));
  DerBrute out;
  std::int64_t sum_min = 0;
  for (std::int64_t t = 0; t < end; ++t) {
    int nr = 0, nh = 0;
    for (auto &r : ra) nr += r[t];
    for (auto &h : ha) nh += h[t];
    out.total_ref += nr;
    out.missed += std::max(0, nr - nh);
    out.false_alarm += std::max(0, nh - nr);
    sum_min += std::min(nr, nh);
    for (std::size_t i = 0; i < rl.size(); ++i)
      for (std::size_t j = 0; j < hl.size(); ++j) co[i][j] += ra[i][t] && ha[j][t];
  }
  out.confusion = sum_min - static_cast<std::int64_t>(std::llround(best_injection(co)));
  return out;
}

// Random annotation on a 10 ms grid.
inline diarkit::Annotation random_annotation(std::mt19937_64 &rng, const std::string &rec, int max_speakers,
                                             int max_segments, std::int64_t span_ms) {
  std::uniform_int_distribution<int> nspk(1, max_speakers), nseg(0, max_segments);
  std::uniform_int_distribution<std::int64_t> on(0, span_ms / 10 - 1);
  diarkit::Annotation a(rec);
  const int S = nspk(rng);
  const int n = nseg(rng);
  std::uniform_int_distribution<int> who(0, S - 1);
  for (int i = 0; i < n; ++i) {
    const std::int64_t o = on(rng) * 10;
    std::uniform_int_distribution<std::int64_t> len(1, std::max<std::int64_t>(1, (span_ms - o) / 10));
    a.try_add(diarkit::Segment(o, len(rng) * 10), "s" + std::to_string(who(rng)));
  }
  return a;
}

// HMM with p(s'|s) = p_loop [s'=s] + (1 - p_loop) pi[s'] and initial pi.
// Enumerates every (state, branch) path. Branch 0 is the loop, 1 the jump.
struct FbBrute {
  double log_evidence = 0.0;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd prior_counts;
};

inline FbBrute fb_brute(const Eigen::MatrixXd &log_em, const Eigen::VectorXd &pi, double p_loop) {
  const int T = static_cast<int>(log_em.rows());
  const int S = static_cast<int>(log_em.cols());
  FbBrute out;
  out.gamma = Eigen::MatrixXd::Zero(T, S);
  out.prior_counts = Eigen::VectorXd::Zero(S);
  double z = 0.0;
  const double shift = log_em.maxCoeff() * T;
  std::vector<int> state(T, 0), branch(T, 0);
  std::function<void(int, double)> rec = [&](int t, double logw) {
    if (t == T) {
      const double w = std::exp(logw - shift);
      z += w;
      for (int u = 0; u < T; ++u) out.gamma(u, state[u]) += w;
      out.prior_counts(state[0]) += w;
      for (int u = 1; u < T; ++u)
        if (branch[u] == 1) out.prior_counts(state[u]) += w;
      return;
    }
    for (int s = 0; s < S; ++s) {
      state[t] = s;
      if (t == 0) {
        if (pi(s) > 0) rec(1, std::log(pi(s)) + log_em(0, s));
        continue;
      }
      if (s == state[t - 1] && p_loop > 0) {
        branch[t] = 0;
        rec(t + 1, logw + std::log(p_loop) + log_em(t, s));
      }
      if (pi(s) > 0) {
        branch[t] = 1;
        rec(t + 1, logw + std::log1p(-p_loop) + std::log(pi(s)) + log_em(t, s));
      }
    }
  };
  rec(0, 0.0);
  out.gamma /= z;
  out.prior_counts /= z;
  out.log_evidence = std::log(z) + shift;
  return out;
}

}  // namespace oracle

#endif  // DIARKIT_TESTS_ORACLES_H_
