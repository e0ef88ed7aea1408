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

#include <doctest.h>

#include <random>

#include "diarkit/ensemble.h"
#include "diarkit/metrics.h"
#include "oracles.h"

using namespace diarkit;

namespace {

Annotation ann(const std::string &rec, std::vector<std::tuple<double, double, std::string>> segs) {
  Annotation a(rec);
  for (const auto &[on, off, label] : segs)
    a.add(Segment::from_bounds(seconds_to_millis(on), seconds_to_millis(off)), label);
  return a;
}

Annotation relabel(const Annotation &a, const std::map<std::string, std::string> &m) {
  Annotation out(a.recording_id());
  for (const auto &e : a.entries()) out.add(e.segment, m.at(e.label));
  return out;
}

}  // namespace

TEST_CASE("identical hypotheses pair label for label") {
  const auto h = ann("r", {{0, 5, "A"}, {5, 9, "B"}, {9, 12, "A"}});
  const std::vector<Annotation> hyps{h, h};
  const auto m = map_labels(hyps);
  CHECK(m[0].at("A") == m[1].at("A"));
  CHECK(m[0].at("B") == m[1].at("B"));
  CHECK(m[0].at("A") != m[0].at("B"));
}

TEST_CASE("disjoint hypotheses stay apart") {
  const std::vector<Annotation> hyps{ann("r", {{0, 5, "A"}}), ann("r", {{6, 9, "A"}})};
  const auto m = map_labels(hyps);
  CHECK(m[0].at("A") != m[1].at("A"));
}

TEST_CASE("permuted hypotheses recover the permutation") {
  const auto base = ann("r", {{0, 4, "A"}, {4, 7, "B"}, {7, 12, "C"}, {12, 14, "A"}});
  const std::vector<Annotation> hyps{base, relabel(base, {{"A", "y"}, {"B", "z"}, {"C", "x"}}),
                                     relabel(base, {{"A", "3"}, {"B", "1"}, {"C", "2"}})};
  const auto m = map_labels(hyps);
  CHECK(m[1].at("y") == m[0].at("A"));
  CHECK(m[1].at("z") == m[0].at("B"));
  CHECK(m[2].at("2") == m[0].at("C"));
  const auto mapped = apply_mapping(hyps, m);
  CHECK(mapped[0] == mapped[1]);
  CHECK(mapped[1] == mapped[2]);
}

TEST_CASE("dover-lap idempotence") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 30; ++i) {
    const auto h = oracle::random_annotation(rng, "r", 3, 10, 20000).merged();
    const std::vector<Annotation> copies{h, h, h};
    const std::vector<double> w{0.5, 0.2, 0.3};
    CHECK(dover_lap(copies, w) == h);
  }
}

TEST_CASE("dover-lap majority and unanimous overlap") {
  const std::vector<Annotation> hyps{ann("r", {{0, 10, "A"}}), ann("r", {{0, 10, "A"}}), ann("r", {{0, 10, "B"}})};
  const auto out = dover_lap(hyps, uniform_weights(3));
  CHECK(out == ann("r", {{0, 10, "A"}}));

  const auto two = ann("r", {{0, 10, "A"}, {0, 10, "B"}});
  const std::vector<Annotation> all{two, two, two};
  CHECK(dover_lap(all, uniform_weights(3)) == two);
}

TEST_CASE("hypothesis order does not matter with equal weights") {
  const auto a = ann("r", {{0, 6, "A"}, {6, 10, "B"}});
  const auto b = ann("r", {{0, 5, "A"}, {5, 10, "B"}});
  const auto c = ann("r", {{0, 7, "A"}, {7, 10, "B"}});
  const std::vector<std::vector<Annotation>> abc{{a}, {b}, {c}}, cab{{c}, {a}, {b}};
  const auto x = run_ensemble(abc, uniform_weights(3));
  const auto y = run_ensemble(cab, uniform_weights(3));
  REQUIRE(x.size() == 1);
  CHECK(der(x[0], y[0]).totals.error() == 0);
  CHECK(der(x[0], ann("r", {{0, 6, "A"}, {6, 10, "B"}})).totals.error() == 0);
}

TEST_CASE("weights") {
  const auto w = normalize_weights(std::vector<double>{2, 1, 1});
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0));
  const auto r = rank_weights(std::vector<int>{1, 2, 4});
  CHECK(r[0] == doctest::Approx(4.0 / 7));
  CHECK(r[2] == doctest::Approx(1.0 / 7));
  CHECK_THROWS_AS(normalize_weights(std::vector<double>{1, -1}), ConfigError);
  CHECK_THROWS_AS(rank_weights(std::vector<int>{0, 1}), ConfigError);
}

TEST_CASE("recording sets must agree") {
  const std::vector<std::vector<Annotation>> systems{{ann("a", {{0, 1, "A"}})}, {ann("b", {{0, 1, "A"}})}};
  CHECK_THROWS_AS(run_ensemble(systems, uniform_weights(2)), DataError);
}
