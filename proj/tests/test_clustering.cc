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

#include <algorithm>
#include <random>

#include "diarkit/backend.h"
#include "diarkit/clustering.h"
#include "diarkit/metrics.h"
#include "oracles.h"

using namespace diarkit;

namespace {

SimilarityMatrix block_sim() {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(4, 4, 0.1);
  s(0, 1) = s(1, 0) = 0.9;
  s(2, 3) = s(3, 2) = 0.9;
  s.diagonal().setOnes();
  return {s};
}

// Diagonalised-space data: class means ~ N(0, diag(phi)), unit within noise.
struct Fixture {
  Eigen::MatrixXd x;
  Eigen::VectorXd phi;
  std::vector<int> truth;
};

Fixture make_fixture(std::mt19937_64 &rng, int n_classes, int per_turn, int turns, int dim, double phi_value,
                     double noise = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Fixture f;
  f.phi = Eigen::VectorXd::Constant(dim, phi_value);
  Eigen::MatrixXd means(n_classes, dim);
  for (int c = 0; c < n_classes; ++c)
    for (int d = 0; d < dim; ++d) means(c, d) = std::sqrt(phi_value) * n(rng);
  f.x.resize(static_cast<Eigen::Index>(per_turn) * turns, dim);
  Eigen::Index r = 0;
  for (int t = 0; t < turns; ++t) {
    const int c = t % n_classes;
    for (int k = 0; k < per_turn; ++k, ++r) {
      for (int d = 0; d < dim; ++d) f.x(r, d) = means(c, d) + noise * n(rng);
      f.truth.push_back(c);
    }
  }
  return f;
}

}  // namespace

TEST_CASE("ahc hand trace") {
  CHECK(ahc(block_sim(), {0.5, 1, std::nullopt}) == std::vector<int>{0, 0, 1, 1});
  CHECK(ahc(block_sim(), {0.95, 1, std::nullopt}) == std::vector<int>{0, 1, 2, 3});
  CHECK(ahc(block_sim(), {0.95, 1, 1}) == std::vector<int>{0, 0, 0, 0});
  CHECK(ahc(block_sim(), {-1.0, 3, std::nullopt}).back() == 2);
}

TEST_CASE("ahc partitions are permutation equivariant and coarsen with lower thresholds") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = make_fixture(rng, 3, 4, 6, 5, 4.0);
    const auto sim = similarity_matrix(CosineBackend{}, f.x);
    const auto base = ahc(sim, {0.3, 1, std::nullopt});
    std::vector<int> order(f.x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd px(f.x.rows(), f.x.cols());
    for (std::size_t i = 0; i < order.size(); ++i) px.row(i) = f.x.row(order[i]);
    const auto perm = ahc(similarity_matrix(CosineBackend{}, px), {0.3, 1, std::nullopt});
    std::vector<int> back(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) back[order[i]] = perm[i];
    CHECK(adjusted_rand_index(base, back) == doctest::Approx(1.0));

    int prev = 0;
    for (double th = -1.0; th <= 1.0; th += 0.1) {
      const auto l = ahc(sim, {th, 1, std::nullopt});
      const int k = *std::max_element(l.begin(), l.end()) + 1;
      CHECK(k >= prev);
      prev = k;
    }
  }
}

TEST_CASE("forward backward matches path enumeration") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int T = 1 + trial % 6;
    const int S = 1 + trial % 3;
    Eigen::MatrixXd le(T, S);
    for (int t = 0; t < T; ++t)
      for (int s = 0; s < S; ++s) le(t, s) = n(rng);
    Eigen::VectorXd pi(S);
    for (int s = 0; s < S; ++s) pi(s) = u(rng);
    pi /= pi.sum();
    const double p_loop = trial % 5 == 0 ? 0.0 : u(rng) * 0.99;
    const auto got = forward_backward(le, pi, p_loop);
    const auto want = oracle::fb_brute(le, pi, p_loop);
    CHECK(std::abs(got.log_evidence - want.log_evidence) <= 1e-10);
    CHECK((got.gamma - want.gamma).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((got.prior_counts - want.prior_counts).cwiseAbs().maxCoeff() <= 1e-10);
    for (int t = 0; t < T; ++t) CHECK(std::abs(got.gamma.row(t).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("forward backward special cases") {
  Eigen::MatrixXd le(4, 1);
  le << -1, -2, -3, -4;
  const auto one = forward_backward(le, Eigen::VectorXd::Ones(1), 0.9);
  CHECK(one.gamma.isOnes());
  CHECK(one.log_evidence == doctest::Approx(-10.0));

  const auto flat = forward_backward(Eigen::MatrixXd::Zero(5, 3), Eigen::VectorXd::Constant(3, 1.0 / 3), 0.0);
  CHECK((flat.gamma.array() - 1.0 / 3).abs().maxCoeff() < 1e-12);
}

TEST_CASE("vbx with a single initial speaker") {
  std::mt19937_64 rng(5);
  const auto f = make_fixture(rng, 1, 10, 2, 4, 10.0);
  const auto r = vbx_refine(f.x, f.phi, std::vector<int>(f.x.rows(), 7), {});
  CHECK(r.labels == std::vector<int>(f.x.rows(), 0));
  CHECK(r.state.gamma.isOnes());
}

TEST_CASE("vbx keeps a correct well separated initialisation") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = make_fixture(rng, 3, 8, 9, 6, 100.0);
    const auto r = vbx_refine(f.x, f.phi, f.truth, {});
    CHECK(adjusted_rand_index(f.truth, r.labels) == 1.0);
  }
}

TEST_CASE("vbx elbo never decreases") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> flip(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = make_fixture(rng, 2 + trial % 3, 6, 8, 5, 3.0);
    std::vector<int> init = f.truth;
    for (auto &l : init)
      if (flip(rng) == 0) l = (l + 1) % 3;
    const auto r = vbx_refine(f.x, f.phi, init, {0.9, 9.0, 4.0, 40, 0.0, 1e-3});
    auto check = [](const std::vector<double> &tr) {
      for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] >= tr[i - 1] - 1e-9);
    };
    check(r.state.elbo_trace);
    for (const auto &p : r.state.pruned_passes) check(p);
  }
}

TEST_CASE("vbx drops a spurious speaker") {
  // Within-recording scatter a third of the PLDA within-class spread. With
  // unit scatter fa = 9 makes a split of pure noise the better ELBO.
  std::mt19937_64 rng(8);
  const auto f = make_fixture(rng, 1, 20, 5, 6, 10.0, 1.0 / 3.0);
  std::vector<int> init(f.x.rows());
  for (std::size_t i = 0; i < init.size(); ++i) init[i] = i < init.size() / 2 ? 0 : 1;
  const auto r = vbx_refine(f.x, f.phi, init, {});
  CHECK(r.state.surviving_clusters.size() == 1);
  CHECK(*std::max_element(r.labels.begin(), r.labels.end()) == 0);
}

TEST_CASE("vbx does not depend on init label names") {
  std::mt19937_64 rng(9);
  const auto f = make_fixture(rng, 3, 6, 6, 5, 5.0);
  std::vector<int> renamed = f.truth;
  for (auto &l : renamed) l = 10 - 3 * l;
  const auto a = vbx_refine(f.x, f.phi, f.truth, {});
  const auto b = vbx_refine(f.x, f.phi, renamed, {});
  CHECK(adjusted_rand_index(a.labels, b.labels) == 1.0);
}

TEST_CASE("vbx config checks") {
  CHECK_THROWS_AS((VbxConfig{1.0, 9, 4, 40, 1e-6, 1e-3}).validate(), ConfigError);
  CHECK_THROWS_AS((VbxConfig{0.9, 0, 4, 40, 1e-6, 1e-3}).validate(), ConfigError);
  CHECK_THROWS_AS((AhcConfig{0.0, 3, 2}).validate(), ConfigError);
}
