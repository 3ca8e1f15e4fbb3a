// Copyright 2026 The trajreward Authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trajreward/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using trajreward::GrpoConfig;
using Group = trajreward::RolloutGroup<double>;
using Eigen::VectorXd;

namespace
{

Group uniform_group(const std::vector<double> & rewards, int tokens)
{
  Group g;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    g.outputs.push_back(std::vector<int>(static_cast<std::size_t>(tokens), 0));
    const VectorXd lp = VectorXd::Constant(tokens, std::log(0.5));
    g.logp_old.push_back(lp);
    g.logp_new.push_back(lp);
    g.logp_ref.push_back(lp);
  }
  g.rewards = Eigen::Map<const VectorXd>(rewards.data(), static_cast<Eigen::Index>(rewards.size()));
  return g;
}

Group random_group(std::mt19937_64 & rng, int n)
{
  std::uniform_int_distribution<int> len(1, 5);
  std::uniform_real_distribution<double> lp(-4.0, -0.01);
  std::normal_distribution<double> shift(0.0, 0.3);
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  Group g;
  g.rewards.resize(n);
  for (int i = 0; i < n; ++i) {
    const int m = len(rng);
    g.outputs.push_back(std::vector<int>(static_cast<std::size_t>(m), i));
    VectorXd o(m), nw(m), rf(m);
    for (int k = 0; k < m; ++k) {
      o(k) = lp(rng);
      nw(k) = std::min(o(k) + shift(rng), -1e-3);
      rf(k) = lp(rng);
    }
    g.logp_old.push_back(o);
    g.logp_new.push_back(nw);
    g.logp_ref.push_back(rf);
    g.rewards(i) = reward(rng);
  }
  return g;
}

}  // namespace

TEST_CASE("group advantages examples")
{
  const VectorXd a = trajreward::group_advantages(VectorXd{{1.0, 2.0, 3.0}}, 1e-8);
  CHECK(a(0) == doctest::Approx(-1.224744871391589).epsilon(1e-14));
  CHECK(a(1) == 0.0);
  CHECK(a(2) == doctest::Approx(1.224744871391589).epsilon(1e-14));

  const VectorXd equal = trajreward::group_advantages(VectorXd{{0.1, 0.1, 0.1}}, 1e-8);
  CHECK(equal.isZero(0.0));

  const VectorXd two = trajreward::group_advantages(VectorXd{{0.0, 1.0}}, 1e-8);
  CHECK(two(0) == -1.0);
  CHECK(two(1) == 1.0);

  CHECK_THROWS_AS(trajreward::group_advantages(VectorXd{{1.0}}, 1e-8), trajreward::GroupTooSmall);
}

TEST_CASE("std floor caps tiny spreads")
{
  const VectorXd a = trajreward::group_advantages(VectorXd{{0.0, 1e-12}}, 1e-8);
  CHECK(a(1) == doctest::Approx(0.5e-12 / 1e-8));
}

TEST_CASE("advantage normalization properties")
{
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(2, 16);
  std::uniform_real_distribution<double> r(-5.0, 5.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    VectorXd rewards(size(rng));
    for (auto & v : rewards) {
      v = r(rng);
    }
    const VectorXd a = trajreward::group_advantages(rewards, 1e-8);
    CHECK(std::abs(a.mean()) < 1e-12);
    CHECK(std::abs(std::sqrt(a.squaredNorm() / a.size()) - 1.0) < 1e-9);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (rewards(i) > rewards(j)) {
          CHECK(a(i) > a(j));
        }
      }
    }
    const VectorXd affine = (scale(rng) * rewards).array() + r(rng);
    CHECK((trajreward::group_advantages(affine, 1e-8) - a).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("token ratio, clipped term and KL estimator")
{
  CHECK(trajreward::token_ratio(-1.3, -1.3) == 1.0);
  CHECK(trajreward::token_ratio(std::log(2.0) - 3.0, -3.0) == doctest::Approx(2.0));
  CHECK(trajreward::token_ratio(-std::log(4.0), 0.0) == doctest::Approx(0.25));
  CHECK(trajreward::token_ratio(-600.0, -1.0) >= 0.0);

  CHECK(trajreward::clipped_term(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(trajreward::clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(trajreward::clipped_term(1.0, 0.37, 0.2) == 0.37);
  CHECK(trajreward::clipped_term(1.0, -2.5, 0.2) == -2.5);

  CHECK(trajreward::kl_penalty(-0.7, -0.7) == 0.0);
  CHECK(trajreward::kl_penalty(-2.0, -1.0) == doctest::Approx(0.7182818284590451).epsilon(1e-14));
  CHECK(trajreward::kl_penalty(-1.0, -2.0) == doctest::Approx(0.36787944117144233).epsilon(1e-14));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> lp(-20.0, 0.0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(trajreward::kl_penalty(lp(rng), lp(rng)) >= 0.0);
  }
}

TEST_CASE("GRPO loss examples")
{
  const GrpoConfig<double> cfg;
  CHECK(trajreward::grpo_loss(uniform_group({0.3, 0.3, 0.3, 0.3}, 4), cfg) == 0.0);
  CHECK(trajreward::grpo_loss(uniform_group({0.0, 1.0}, 1), cfg) == 0.0);

  Group g = uniform_group({1.0, 0.0}, 1);
  g.logp_new[0](0) = g.logp_old[0](0) + std::log(1.5);
  g.logp_new[1](0) = g.logp_old[1](0) + std::log(0.5);
  const GrpoConfig<double> no_kl{0.2, 0.0, 1e-8, false};
  const auto terms = trajreward::grpo_loss_terms(g, no_kl);
  CHECK(terms.loss == doctest::Approx(-0.4));
  CHECK(terms.clip_fraction == 1.0);

  CHECK_THROWS_AS(trajreward::grpo_loss(uniform_group({1.0}, 2), cfg), trajreward::GroupTooSmall);
}

TEST_CASE("mean_over_group divides by the group size")
{
  std::mt19937_64 rng(4);
  const Group g = random_group(rng, 6);
  GrpoConfig<double> summed;
  GrpoConfig<double> averaged;
  averaged.mean_over_group = true;
  CHECK(trajreward::grpo_loss(g, averaged) ==
    doctest::Approx(trajreward::grpo_loss(g, summed) / 6.0).epsilon(1e-12));
}

TEST_CASE("GRPO loss is invariant to permuting outputs")
{
  std::mt19937_64 rng(8);
  const GrpoConfig<double> cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const Group g = random_group(rng, 5);
    std::vector<std::size_t> perm(g.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Group p;
    p.rewards.resize(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < perm.size(); ++i) {
      p.outputs.push_back(g.outputs[perm[i]]);
      p.logp_old.push_back(g.logp_old[perm[i]]);
      p.logp_new.push_back(g.logp_new[perm[i]]);
      p.logp_ref.push_back(g.logp_ref[perm[i]]);
      p.rewards(static_cast<Eigen::Index>(i)) = g.rewards(static_cast<Eigen::Index>(perm[i]));
    }
    CHECK(trajreward::grpo_loss(p, cfg) ==
      doctest::Approx(trajreward::grpo_loss(g, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("log-probability gradient matches finite differences")
{
  std::mt19937_64 rng(12);
  const GrpoConfig<double> cfg{0.2, 0.3, 1e-8, false};
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    Group g = random_group(rng, 4);
    const auto terms = trajreward::grpo_loss_terms(g, cfg);
    for (std::size_t o = 0; o < g.size(); ++o) {
      for (Eigen::Index k = 0; k < g.logp_new[o].size(); ++k) {
        const double ratio = std::exp(g.logp_new[o](k) - g.logp_old[o](k));
        if (std::abs(ratio - 0.8) < 1e-4 || std::abs(ratio - 1.2) < 1e-4) {
          continue;  // clip kink
        }
        const double base = g.logp_new[o](k);
        g.logp_new[o](k) = base + h;
        const double up = trajreward::grpo_loss(g, cfg);
        g.logp_new[o](k) = base - h;
        const double down = trajreward::grpo_loss(g, cfg);
        g.logp_new[o](k) = base;
        CHECK(terms.grad_logp_new[o](k) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("rollout group validation")
{
  Group g = uniform_group({0.0, 1.0}, 2);
  g.logp_new[1](0) = 0.5;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = uniform_group({0.0, 1.0}, 2);
  g.logp_ref[0].resize(1);
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("GRPO config validation")
{
  CHECK_NOTHROW(GrpoConfig<double>{}.validate());
  CHECK_THROWS_AS((GrpoConfig<double>{1.0, 0.0, 1e-8, false}.validate()), trajreward::ConfigError);
  CHECK_THROWS_AS((GrpoConfig<double>{0.2, -1.0, 1e-8, false}.validate()), trajreward::ConfigError);
  CHECK_THROWS_AS((GrpoConfig<double>{0.2, 0.0, 0.0, false}.validate()), trajreward::ConfigError);
}
