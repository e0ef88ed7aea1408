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

#include "diarkit/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <thread>

namespace diarkit {

std::optional<double> DerComponents::der() const {
  if (total_ref == 0) return std::nullopt;
  return static_cast<double>(error()) / static_cast<double>(total_ref);
}

namespace {

// Minimum-cost assignment for an n x m cost matrix with n <= m
// (potential-based Hungarian algorithm). Returns the column of each row.
template <typename T>
std::vector<int> hungarian_min(const std::vector<std::vector<T>> &cost, std::size_t n, std::size_t m) {
  const T inf = std::numeric_limits<T>::max() / 4;
  std::vector<T> u(n + 1, 0), v(m + 1, 0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<T> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      T delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const T cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

template <typename T>
std::vector<int> max_assignment(const std::vector<std::vector<T>> &w) {
  const std::size_t rows = w.size();
  if (rows == 0) return {};
  const std::size_t cols = w.front().size();
  for (const auto &r : w) {
    if (r.size() != cols) throw DataError("ragged assignment matrix");
    for (const auto &x : r) {
      if (!(x >= 0)) throw DataError("assignment weights must be non-negative");
    }
  }
  std::vector<int> out(rows, -1);
  if (cols == 0) return out;
  if (rows <= cols) {
    std::vector<std::vector<T>> cost(rows, std::vector<T>(cols));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) cost[i][j] = -w[i][j];
    out = hungarian_min(cost, rows, cols);
  } else {
    std::vector<std::vector<T>> cost(cols, std::vector<T>(rows));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) cost[j][i] = -w[i][j];
    const auto col_to_row = hungarian_min(cost, cols, rows);
    for (std::size_t j = 0; j < cols; ++j) {
      if (col_to_row[j] >= 0) out[col_to_row[j]] = static_cast<int>(j);
    }
  }
  return out;
}

// Removes [t - collar, t + collar] around every reference boundary.
std::vector<Segment> apply_collar(const std::vector<Segment> &regions, const Annotation &reference,
                                  Millis collar) {
  if (collar <= 0) return regions;
  std::vector<std::pair<Millis, Millis>> holes;
  for (const auto &e : reference.entries()) {
    for (Millis t : {e.segment.onset(), e.segment.end()}) {
      holes.emplace_back(std::max<Millis>(0, t - collar), t + collar);
    }
  }
  std::sort(holes.begin(), holes.end());
  std::vector<std::pair<Millis, Millis>> merged;
  for (const auto &h : holes) {
    if (!merged.empty() && h.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, h.second);
    } else {
      merged.push_back(h);
    }
  }
  std::vector<Segment> out;
  for (const auto &r : regions) {
    Millis cursor = r.onset();
    for (const auto &[lo, hi] : merged) {
      if (hi <= cursor || lo >= r.end()) continue;
      if (lo > cursor) out.push_back(Segment::from_bounds(cursor, lo));
      cursor = std::max(cursor, hi);
    }
    if (cursor < r.end()) out.push_back(Segment::from_bounds(cursor, r.end()));
  }
  return out;
}


std::vector<std::vector<int>> active_sets(const Annotation &a, const std::vector<std::string> &labels,
                                          const std::vector<Millis> &times) {
  std::vector<std::vector<int>> out(times.empty() ? 0 : times.size() - 1);
  for (const auto &e : a.entries()) {
    const int id = static_cast<int>(std::lower_bound(labels.begin(), labels.end(), e.label) -
                                    labels.begin());
    auto lo = std::lower_bound(times.begin(), times.end(), e.segment.onset()) - times.begin();
    auto hi = std::lower_bound(times.begin(), times.end(), e.segment.end()) - times.begin();
    for (auto k = lo; k < hi; ++k) out[k].push_back(id);
  }
  return out;
}

// Regions with two or more reference speakers.
std::vector<Segment> drop_overlap(const std::vector<Segment> &regions, const Annotation &reference) {
  const Annotation ref = reference.merged();
  const std::vector<Annotation> one{ref};
  const auto times = boundaries(one);
  const auto labels = ref.labels();
  const auto active = active_sets(ref, labels, times);
  std::vector<std::pair<Millis, Millis>> holes;
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (active[k].size() >= 2) holes.emplace_back(times[k], times[k + 1]);
  }
  std::vector<Segment> out;
  for (const auto &r : regions) {
    Millis cursor = r.onset();
    for (const auto &[lo, hi] : holes) {
      if (hi <= cursor || lo >= r.end()) continue;
      if (lo > cursor) out.push_back(Segment::from_bounds(cursor, lo));
      cursor = std::max(cursor, hi);
    }
    if (cursor < r.end()) out.push_back(Segment::from_bounds(cursor, r.end()));
  }
  return out;
}

}  // namespace

std::vector<int> map_optimal(const Eigen::MatrixXd &weights) {
  std::vector<std::vector<double>> w(weights.rows(), std::vector<double>(weights.cols()));
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    for (Eigen::Index j = 0; j < weights.cols(); ++j) w[i][j] = weights(i, j);
  return max_assignment(w);
}

std::vector<int> map_optimal(const std::vector<std::vector<Millis>> &weights) {
  return max_assignment(weights);
}

DerReport der(const Annotation &reference, const Annotation &hypothesis,
              const std::optional<Uem> &uem, const DerOptions &options) {
  if (reference.recording_id() != hypothesis.recording_id())
    throw DataError("reference '" + reference.recording_id() + "' and hypothesis '" +
                    hypothesis.recording_id() + "' are different recordings");
  if (options.collar < 0) throw ConfigError("collar must be non-negative");
  if (uem && uem->recording_id() != reference.recording_id())
    throw DataError("UEM is for recording '" + uem->recording_id() + "'");

  std::vector<Segment> regions = uem ? uem->regions() : default_uem(reference, hypothesis).regions();
  regions = apply_collar(regions, reference, options.collar);
  if (!options.score_overlap) regions = drop_overlap(regions, reference);
  const Uem scored(reference.recording_id(), regions);

  const Annotation ref = crop(reference.merged(), scored).merged();
  const Annotation hyp = crop(hypothesis.merged(), scored).merged();
  const std::vector<Annotation> both{ref, hyp};
  const auto times = boundaries(both);
  const auto ref_labels = ref.labels();
  const auto hyp_labels = hyp.labels();
  const auto ref_active = active_sets(ref, ref_labels, times);
  const auto hyp_active = active_sets(hyp, hyp_labels, times);

  std::vector<std::vector<Millis>> cooc(ref_labels.size(), std::vector<Millis>(hyp_labels.size(), 0));
  for (std::size_t k = 0; k < ref_active.size(); ++k) {
    const Millis d = times[k + 1] - times[k];
    for (int r : ref_active[k])
      for (int h : hyp_active[k]) cooc[r][h] += d;
  }
  const auto ref_to_hyp = map_optimal(cooc);
  std::vector<int> hyp_to_ref(hyp_labels.size(), -1);
  DerReport report;
  for (std::size_t r = 0; r < ref_to_hyp.size(); ++r) {
    const int h = ref_to_hyp[r];
    if (h >= 0 && cooc[r][h] > 0) {
      hyp_to_ref[h] = static_cast<int>(r);
      report.mapping[hyp_labels[h]] = ref_labels[r];
    }
  }

  DerComponents &c = report.totals;
  c.recording_id = reference.recording_id();
  for (std::size_t k = 0; k < ref_active.size(); ++k) {
    const Millis d = times[k + 1] - times[k];
    const auto nr = static_cast<Millis>(ref_active[k].size());
    const auto nh = static_cast<Millis>(hyp_active[k].size());
    Millis correct = 0;
    for (int h : hyp_active[k]) {
      const int r = hyp_to_ref[h];
      if (r >= 0 && std::find(ref_active[k].begin(), ref_active[k].end(), r) != ref_active[k].end())
        ++correct;
    }
    c.total_ref += nr * d;
    c.missed += std::max<Millis>(nr - nh, 0) * d;
    c.false_alarm += std::max<Millis>(nh - nr, 0) * d;
    c.confusion += (std::min(nr, nh) - correct) * d;
  }
  report.per_recording.push_back(c);
  return report;
}

DerReport der_corpus(std::span<const std::pair<Annotation, Annotation>> pairs,
                     const std::map<std::string, Uem> &uems, const DerOptions &options) {
  if (pairs.empty()) throw DataError("no recordings to score");
  DerReport out;
  out.totals.recording_id = "<corpus>";
  for (const auto &[ref, hyp] : pairs) {
    std::optional<Uem> uem;
    if (auto it = uems.find(ref.recording_id()); it != uems.end()) uem = it->second;
    DerReport r;
    try {
      r = der(ref, hyp, uem, options);
    } catch (const DataError &e) {
      throw DataError(ref.recording_id() + ": " + e.what());
    }
    out.totals.missed += r.totals.missed;
    out.totals.false_alarm += r.totals.false_alarm;
    out.totals.confusion += r.totals.confusion;
    out.totals.total_ref += r.totals.total_ref;
    out.per_recording.push_back(r.totals);
  }
  return out;
}

namespace {

double percentile(const std::vector<double> &sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

CiReport bootstrap_ci(std::span<const DerComponents> per_recording, int n_bootstrap,
                      std::uint64_t seed, double level, int threads) {
  if (per_recording.empty()) throw DataError("bootstrap needs at least one recording");
  if (n_bootstrap < 1) throw ConfigError("n_bootstrap must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  Millis err = 0, total = 0;
  for (const auto &c : per_recording) {
    err += c.error();
    total += c.total_ref;
  }
  if (total == 0) throw DataError("no reference speech: DER undefined");

  CiReport ci;
  ci.point = static_cast<double>(err) / static_cast<double>(total);
  ci.n_bootstrap = n_bootstrap;
  ci.seed = seed;
  ci.level = level;

  const std::size_t n = per_recording.size();
  std::vector<double> stats(n_bootstrap, std::numeric_limits<double>::quiet_NaN());
  auto work = [&](int first, int last) {
    for (int b = first; b < last; ++b) {
      std::seed_seq seq{seed, static_cast<std::uint64_t>(b)};
      std::mt19937_64 rng(seq);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      Millis e = 0, t = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const auto &c = per_recording[pick(rng)];
        e += c.error();
        t += c.total_ref;
      }
      if (t > 0) stats[b] = static_cast<double>(e) / static_cast<double>(t);
    }
  };
  threads = std::clamp(threads, 1, n_bootstrap);
  if (threads == 1) {
    work(0, n_bootstrap);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_bootstrap + threads - 1) / threads;
    for (int i = 0; i < threads; ++i) {
      const int first = i * chunk;
      const int last = std::min(n_bootstrap, first + chunk);
      if (first < last) pool.emplace_back(work, first, last);
    }
    for (auto &t : pool) t.join();
  }
  // Resamples that drew only recordings without reference speech are skipped.
  std::vector<double> valid;
  for (double s : stats) {
    if (!std::isnan(s)) valid.push_back(s);
  }
  std::sort(valid.begin(), valid.end());
  const double tail = (1.0 - level) / 2.0;
  ci.low = std::min(percentile(valid, tail), ci.point);
  ci.high = std::max(percentile(valid, 1.0 - tail), ci.point);
  return ci;
}

std::string format_ci(const CiReport &ci) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f (%.1f-%.1f)", 100.0 * ci.point, 100.0 * ci.low,
                100.0 * ci.high);
  return buf;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ca, cb;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{a[i], b[i]}] += 1;
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0, sum_a = 0, sum_b = 0;
  for (const auto &[_, v] : joint) index += choose2(v);
  for (const auto &[_, v] : ca) sum_a += choose2(v);
  for (const auto &[_, v] : cb) sum_b += choose2(v);
  const double expected = sum_a * sum_b / choose2(static_cast<double>(n));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return index == max_index ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace diarkit
