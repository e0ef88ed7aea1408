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

#include "diarkit/ensemble.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace diarkit {

namespace {

// Overlap of two labels' segment sets (each already merged per label).
Millis label_overlap(const std::vector<Segment> &a, const std::vector<Segment> &b) {
  Millis total = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    total += overlap(a[i], b[j]);
    if (a[i].end() < b[j].end()) {
      ++i;
    } else {
      ++j;
    }
  }
  return total;
}

std::map<std::string, std::vector<Segment>> segments_by_label(const Annotation &a) {
  std::map<std::string, std::vector<Segment>> out;
  const Annotation merged = a.merged();
  for (const auto &e : merged.entries()) out[e.label].push_back(e.segment);
  return out;
}

}  // namespace

LabelMapping map_labels(std::span<const Annotation> hypotheses) {
  const std::size_t K = hypotheses.size();
  // Nodes are (hypothesis, label index), flattened.
  std::vector<std::pair<std::size_t, std::string>> nodes;
  std::vector<std::vector<std::vector<Segment>>> segs(K);
  std::vector<std::size_t> first_node(K + 1, 0);
  for (std::size_t k = 0; k < K; ++k) {
    first_node[k] = nodes.size();
    for (auto &[label, s] : segments_by_label(hypotheses[k])) {
      nodes.emplace_back(k, label);
      segs[k].push_back(std::move(s));
    }
  }
  first_node[K] = nodes.size();

  struct Edge {
    Millis weight;
    std::size_t a, b;  // node ids, hyp(a) < hyp(b)
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      for (std::size_t a = first_node[i]; a < first_node[i + 1]; ++a) {
        for (std::size_t b = first_node[j]; b < first_node[j + 1]; ++b) {
          const Millis w = label_overlap(segs[i][a - first_node[i]], segs[j][b - first_node[j]]);
          if (w > 0) edges.push_back({w, a, b});
        }
      }
    }
  }
  // Node ids increase with (hypothesis, label), so id order is (i, a, j, b) order.
  std::sort(edges.begin(), edges.end(), [](const Edge &x, const Edge &y) {
    return std::tie(y.weight, x.a, x.b) < std::tie(x.weight, y.a, y.b);
  });

  std::vector<std::size_t> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::set<std::size_t>> hyps(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) hyps[n].insert(nodes[n].first);
  auto find = [&](std::size_t n) {
    while (parent[n] != n) n = parent[n] = parent[parent[n]];
    return n;
  };
  for (const auto &e : edges) {
    std::size_t ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    bool clash = false;
    for (auto h : hyps[rb]) {
      if (hyps[ra].count(h)) {
        clash = true;
        break;
      }
    }
    if (clash) continue;
    if (rb < ra) std::swap(ra, rb);
    parent[rb] = ra;
    hyps[ra].insert(hyps[rb].begin(), hyps[rb].end());
  }

  // The root is always the smallest node id, i.e. the member from the lowest
  // hypothesis; groups are named after it.
  std::map<std::size_t, std::string> group_name;
  std::set<std::string> used;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const std::size_t r = find(n);
    if (group_name.count(r)) continue;
    std::string name = nodes[r].second;
    for (int suffix = 1; used.count(name); ++suffix) {
      name = nodes[r].second + "_" + std::to_string(suffix);
    }
    used.insert(name);
    group_name[r] = name;
  }
  LabelMapping mapping(K);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    mapping[nodes[n].first][nodes[n].second] = group_name[find(n)];
  }
  return mapping;
}

std::vector<Annotation> apply_mapping(std::span<const Annotation> hypotheses,
                                      const LabelMapping &mapping) {
  if (mapping.size() != hypotheses.size()) throw DataError("mapping/hypothesis count mismatch");
  std::vector<Annotation> out;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    Annotation a(hypotheses[k].recording_id());
    for (const auto &e : hypotheses[k].entries()) {
      auto it = mapping[k].find(e.label);
      if (it == mapping[k].end()) throw DataError("label '" + e.label + "' missing from mapping");
      a.try_add(e.segment, it->second);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<double> uniform_weights(std::size_t n) {
  if (n == 0) throw ConfigError("no hypotheses to weight");
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> normalize_weights(std::span<const double> weights) {
  if (weights.empty()) throw ConfigError("no weights given");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("weights must be positive and finite");
    total += w;
  }
  std::vector<double> out(weights.begin(), weights.end());
  for (double &w : out) w /= total;
  return out;
}

std::vector<double> rank_weights(std::span<const int> ranks) {
  std::vector<double> raw;
  for (int r : ranks) {
    if (r < 1) throw ConfigError("ranks are 1-based");
    raw.push_back(1.0 / r);
  }
  return normalize_weights(raw);
}

Annotation dover_lap(std::span<const Annotation> hypotheses, std::span<const double> weights) {
  if (hypotheses.size() < 2) throw DataError("DOVER-Lap needs at least 2 hypotheses");
  if (weights.size() != hypotheses.size())
    throw ConfigError("expected " + std::to_string(hypotheses.size()) + " weights, got " +
                      std::to_string(weights.size()));
  const auto w = normalize_weights(weights);
  const std::string &rec = hypotheses.front().recording_id();
  for (const auto &h : hypotheses) {
    if (h.recording_id() != rec) throw DataError("hypotheses cover different recordings");
  }

  const auto times = boundaries(hypotheses);
  // Per-hypothesis sweep over merged segments, collecting active labels per region.
  std::vector<Annotation> merged;
  for (const auto &h : hypotheses) merged.push_back(h.merged());

  std::map<std::string, std::vector<std::pair<Millis, Millis>>> runs;
  for (std::size_t r = 0; r + 1 < times.size(); ++r) {
    const Millis lo = times[r];
    const Millis hi = times[r + 1];
    std::map<std::string, double> votes;
    double expected = 0.0;
    for (std::size_t k = 0; k < merged.size(); ++k) {
      int active = 0;
      for (const auto &e : merged[k].entries()) {
        if (e.segment.onset() >= hi) break;
        if (e.segment.onset() <= lo && e.segment.end() >= hi) {
          votes[e.label] += w[k];
          ++active;
        }
      }
      expected += w[k] * active;
    }
    const auto n = static_cast<std::size_t>(std::floor(expected + 0.5 + 1e-9));
    std::vector<std::pair<std::string, double>> ranked(votes.begin(), votes.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto &a, const auto &b) { return a.second > b.second + 1e-12; });
    for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) {
      auto &list = runs[ranked[i].first];
      if (!list.empty() && list.back().second == lo) {
        list.back().second = hi;
      } else {
        list.emplace_back(lo, hi);
      }
    }
  }
  Annotation out(rec);
  for (const auto &[label, list] : runs) {
    for (const auto &[lo, hi] : list) out.add(Segment::from_bounds(lo, hi), label);
  }
  return out;
}

std::vector<Annotation> run_ensemble(std::span<const std::vector<Annotation>> systems,
                                     std::span<const double> weights) {
  if (systems.size() < 2) throw DataError("ensembling needs at least 2 systems");
  std::vector<std::map<std::string, Annotation>> indexed;
  for (const auto &s : systems) indexed.push_back(index_by_recording(s));
  for (std::size_t k = 1; k < indexed.size(); ++k) {
    std::vector<std::string> a, b;
    for (const auto &[r, _] : indexed[0]) a.push_back(r);
    for (const auto &[r, _] : indexed[k]) b.push_back(r);
    if (a != b)
      throw DataError("system " + std::to_string(k + 1) +
                      " covers different recordings than system 1");
  }
  std::vector<Annotation> out;
  for (const auto &[rec, _] : indexed[0]) {
    std::vector<Annotation> hyps;
    for (const auto &ix : indexed) hyps.push_back(ix.at(rec));
    const auto mapped = apply_mapping(hyps, map_labels(hyps));
    out.push_back(dover_lap(mapped, weights));
  }
  return out;
}

}  // namespace diarkit
