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

#include "diarkit/losses.h"
#include "oracles.h"

using namespace diarkit;

namespace {

Eigen::MatrixXd random_probs(std::mt19937_64 &rng, int T, int K) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(T, K);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < K; ++k) m(t, k) = u(rng);
  return m;
}

Eigen::MatrixXd random_binary(std::mt19937_64 &rng, int T, int K, int max_active = 99) {
  std::bernoulli_distribution b(0.4);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(T, K);
  for (int t = 0; t < T; ++t) {
    int active = 0;
    for (int k = 0; k < K; ++k)
      if (b(rng) && active < max_active) {
        m(t, k) = 1.0;
        ++active;
      }
  }
  return m;
}

Eigen::MatrixXd random_logprobs(std::mt19937_64 &rng, int T, int C) {
  std::normal_distribution<double> n(0.0, 2.0);
  Eigen::MatrixXd m(T, C);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < C; ++c) m(t, c) = n(rng);
    const double lse = std::log(m.row(t).array().exp().sum());
    m.row(t).array() -= lse;
  }
  return m;
}

}  // namespace

TEST_CASE("powerset sizes and ordering") {
  const PowersetSpace s(3, 2);
  CHECK(s.num_classes() == 7);
  CHECK(s.classes() == oracle::powerset_classes(3, 2));
  CHECK(PowersetSpace(1, 1).num_classes() == 2);
  CHECK(PowersetSpace(3, 3).num_classes() == 8);
  CHECK(s.encode(std::vector<int>{0, 1, 1}) == 6);
  CHECK(s.encode(std::vector<int>{0, 0, 0}) == 0);
  for (int c = 0; c < s.num_classes(); ++c) CHECK(s.encode(s.decode(c)) == c);
  CHECK_THROWS_AS(s.encode(std::vector<int>{1, 1, 1}), DataError);
  CHECK_THROWS_AS(PowersetSpace(3, 4), ConfigError);
}

TEST_CASE("pit hand case") {
  Eigen::MatrixXd pred(1, 2), ref(1, 2);
  pred << 0.9, 0.1;
  ref << 0.0, 1.0;
  const auto r = pit_loss(pred, ref);
  CHECK(r.loss == doctest::Approx(0.105361).epsilon(1e-6));
  CHECK(r.permutation == std::vector<int>{1, 0});
  CHECK(bce_under_permutation(pred, ref, std::vector<int>{0, 1}) == doctest::Approx(2.302585).epsilon(1e-6));
}

TEST_CASE("pit of a hard reference against itself sits at the clip bound") {
  Eigen::MatrixXd ref(3, 2);
  ref << 1, 0, 0, 1, 1, 1;
  const auto r = pit_loss(ref, ref);
  CHECK(r.permutation == std::vector<int>{0, 1});
  CHECK(r.loss == doctest::Approx(-std::log1p(-1e-7)).epsilon(1e-9));
}

TEST_CASE("pit matches the permutation oracle") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const int K = 1 + i % 4;
    const auto pred = random_probs(rng, 5, K);
    const auto ref = random_binary(rng, 5, K);
    const auto r = pit_loss(pred, ref);
    CHECK(std::abs(r.loss - oracle::pit_min(pred, ref)) <= 1e-12);
    CHECK(r.loss <= oracle::bce(pred, ref, std::vector<int>(r.permutation)) + 1e-15);
  }
}

TEST_CASE("pit is invariant to a shared column permutation") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto pred = random_probs(rng, 6, 3);
    const auto ref = random_binary(rng, 6, 3);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(3);
    P.indices() << 2, 0, 1;
    CHECK(std::abs(pit_loss(pred, ref).loss - pit_loss(pred * P, ref * P).loss) <= 1e-12);
  }
}

TEST_CASE("powerset ce") {
  const PowersetSpace s(3, 2);
  std::mt19937_64 rng(4);
  SUBCASE("one-hot matching prediction gives zero") {
    const auto ref = random_binary(rng, 4, 3, 2);
    Eigen::MatrixXd logp = Eigen::MatrixXd::Constant(4, 7, -1e9);
    for (int t = 0; t < 4; ++t) {
      std::vector<int> row{int(ref(t, 0)), int(ref(t, 1)), int(ref(t, 2))};
      logp(t, s.encode(row)) = 0.0;
    }
    const auto r = powerset_ce(logp, ref, s);
    CHECK(r.loss == 0.0);
    CHECK(r.permutation == std::vector<int>{0, 1, 2});
  }
  SUBCASE("random cases match the oracle and are permutation invariant") {
    for (int i = 0; i < 50; ++i) {
      const auto logp = random_logprobs(rng, 4, 7);
      const auto ref = random_binary(rng, 4, 3, 2);
      const auto r = powerset_ce(logp, ref, s);
      CHECK(std::abs(r.loss - oracle::powerset_min(logp, ref, 2)) <= 1e-12);
      Eigen::PermutationMatrix<Eigen::Dynamic> P(3);
      P.indices() << 1, 2, 0;
      CHECK(std::abs(powerset_ce(logp, ref * P, s).loss - r.loss) <= 1e-12);
    }
  }
  SUBCASE("rows must be log-probabilities") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(1, 7);
    CHECK_THROWS_AS(powerset_ce(bad, Eigen::MatrixXd::Zero(1, 3), s), DataError);
  }
}

TEST_CASE("mixit") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  auto signal = [&](int rows, int T) {
    Eigen::MatrixXd m(rows, T);
    for (int r = 0; r < rows; ++r)
      for (int t = 0; t < T; ++t) m(r, t) = n(rng);
    return m;
  };
  SUBCASE("identity and swapped sources") {
    const Eigen::MatrixXd s = signal(2, 16);
    const auto r = mixit_loss({s, s}, MixitLossKind::kMse);
    CHECK(r.loss == 0.0);
    CHECK(r.assignment == Eigen::MatrixXi::Identity(2, 2));
    Eigen::MatrixXd swapped(2, 16);
    swapped.row(0) = s.row(1);
    swapped.row(1) = s.row(0);
    const auto q = mixit_loss({s, swapped}, MixitLossKind::kMse);
    CHECK(q.loss == 0.0);
    CHECK(q.assignment(0, 1) == 1);
    CHECK(q.assignment(1, 0) == 1);
  }
  SUBCASE("random cases match the assignment oracle") {
    for (int i = 0; i < 60; ++i) {
      const int M = 2 + i % 5;
      MixtureOfMixtures mom{signal(2, 16), signal(M, 16)};
      for (bool mse : {true, false}) {
        const auto r = mixit_loss(mom, mse ? MixitLossKind::kMse : MixitLossKind::kNegSnr);
        CHECK(std::abs(r.loss - oracle::mixit_min(mom.mixtures, mom.estimated_sources, mse)) <= 1e-12);
        CHECK(r.assignment.colwise().sum().minCoeff() == 1);
        CHECK(r.assignment.colwise().sum().maxCoeff() == 1);
        if (mse) CHECK(r.loss >= 0.0);
      }
    }
  }
  SUBCASE("limits") {
    CHECK_THROWS_AS(mixit_loss({signal(2, 4), signal(9, 4)}), DataError);
    CHECK_THROWS_AS(mixit_loss({signal(3, 4), signal(2, 4)}), DataError);
    CHECK_THROWS_AS(parse_mixit_kind("l1"), ConfigError);
  }
}

TEST_CASE("pixit") {
  CHECK(pixit_loss(2.0, 1.0, 0.1) == doctest::Approx(1.1));
  CHECK(pixit_loss(2.0, 1.0, 1.0) == 2.0);
  CHECK(pixit_loss(2.0, 1.0, 0.0) == 1.0);
  CHECK(kCanonicalPixitLambda == 0.1);
  CHECK_THROWS_AS(pixit_loss(1.0, 1.0, 1.5), ConfigError);
}
