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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "trajreward/errors.hpp"
#include "trajreward/frechet.hpp"
#include "trajreward/geometry.hpp"
#include "trajreward/grpo.hpp"
#include "trajreward/metrics.hpp"
#include "trajreward/response_format.hpp"
#include "trajreward/toy_trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace tr = trajreward;
using Traj = tr::Trajectory<double>;
using Box = tr::Box<double>;

namespace
{

struct Outcome
{
  bool pass;
  std::string detail;
};

Traj random_traj(std::mt19937_64 & rng, int max_points)
{
  std::uniform_int_distribution<int> count(1, max_points);
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  const int n = count(rng);
  tr::PointMatrix<double> pts(n, 2);
  for (int i = 0; i < n; ++i) {
    pts.row(i) << coord(rng), coord(rng);
  }
  return Traj(std::move(pts));
}

// 1. Avg column of report rows.
Outcome avg_column()
{
  struct Row
  {
    double dfd, hd, rmse, avg;
  };
  const Row rows[] = {{106.20, 97.90, 71.12, 91.74}, {114.30, 98.43, 68.97, 93.90}};
  std::ostringstream detail;
  bool pass = true;
  for (const auto & r : rows) {
    // Spread each column around its mean so the records differ.
    std::vector<tr::TrajectoryScore<double>> scores{
      {r.dfd - 5.0, r.hd + 3.0, r.rmse - 1.0}, {r.dfd + 5.0, r.hd - 3.0, r.rmse + 1.0}};
    const auto agg = tr::aggregate<double>(scores, {});
    const bool ok = std::abs(*agg.avg - r.avg) <= 0.01;
    pass = pass && ok;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "Avg %.4f (want %.2f) ", *agg.avg, r.avg);
    detail << buf;
  }
  return {pass, detail.str()};
}

// 2. Dynamic programming agrees with brute-force enumeration.
Outcome frechet_oracle()
{
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> weight(0.0, 20.0);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Traj p = random_traj(rng, 6);
    const Traj q = random_traj(rng, 6);
    worst = std::max(worst, std::abs(tr::discrete_frechet(p, q) - tr::frechet_bruteforce(p, q)));

    const tr::AlafConfig<double> cfg{weight(rng), weight(rng)};
    const Traj pd = tr::dedup(p);
    const Traj qd = tr::dedup(q);
    const auto pf = tr::compute_features(pd);
    const auto qf = tr::compute_features(qd);
    const double brute = tr::frechet_bruteforce<double>(
      pd.size(), qd.size(), [&](Eigen::Index i, Eigen::Index j) {
        return tr::pair_cost<double>(
          pd.point(i), pf.tangents.row(i).transpose(), pf.seg_lengths(i), qd.point(j),
          qf.tangents.row(j).transpose(), qf.seg_lengths(j), cfg);
      });
    worst = std::max(worst, std::abs(tr::alaf_distance(p, q, cfg) - brute));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max |dp - brute| = %.3g", worst);
  return {worst <= 1e-9, buf};
}

// 3. Zero weights reduce the augmented distance to the plain one.
Outcome alaf_reduction()
{
  std::mt19937_64 rng(33);
  const tr::AlafConfig<double> zero{0.0, 0.0};
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Traj p = random_traj(rng, 12);
    const Traj q = random_traj(rng, 12);
    mismatches += tr::alaf_distance(p, q, zero) == tr::discrete_frechet(p, q) ? 0 : 1;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of 500 pairs differ"};
}

// 4. GIoU properties and worked examples.
Outcome giou_suite()
{
  bool examples = tr::giou(Box{0, 0, 10, 10}, Box{0, 0, 10, 10}) == 1.0 &&
    tr::giou(Box{0, 0, 10, 10}, Box{10, 0, 20, 10}) == 0.0 &&
    tr::giou(Box{0, 0, 10, 10}, Box{20, 0, 30, 10}) == -1.0 / 3.0;

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  std::uniform_int_distribution<int> grid(0, 20);
  std::bernoulli_distribution snap(0.3);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto draw = [&] {
      if (snap(rng)) {
        return tr::normalize_box(Box{
          grid(rng) * 50.0, grid(rng) * 50.0, grid(rng) * 50.0, grid(rng) * 50.0}).box;
      }
      return tr::normalize_box(Box{coord(rng), coord(rng), coord(rng), coord(rng)}).box;
    };
    const Box a = draw();
    const Box b = trial % 10 == 0 ? a : draw();
    const double g = tr::giou(a, b);
    const double iou = tr::box_iou(a, b);
    const bool identical = a == b && a.area() > 0.0;
    if (!(g <= iou) || !(g > -1.0 && g <= 1.0) || ((g == 1.0) != identical)) {
      ++violations;
    }
  }
  return {examples && violations == 0,
    std::string("examples ") + (examples ? "exact" : "wrong") + ", " +
      std::to_string(violations) + " property violations"};
}

// 5. Analytic logit gradient against central finite differences.
Outcome gradient_check()
{
  std::mt19937_64 rng(5);
  const tr::RewardConfig reward_cfg;
  std::uniform_real_distribution<double> clip(0.05, 0.4);
  std::uniform_real_distribution<double> beta(0.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    const tr::ToyTask task = tr::make_toy_task(rng());
    const tr::GrpoConfig<double> grpo{clip(rng), beta(rng), 1e-8, instance % 2 == 1};
    const auto random_policy = [&](double scale) {
      tr::SoftmaxPolicy p(1, 3);
      std::normal_distribution<double> n(0.0, scale);
      for (Eigen::Index i = 0; i < p.logits().size(); ++i) {
        p.logits().data()[i] = n(rng);
      }
      return p;
    };
    const tr::SoftmaxPolicy old_policy = random_policy(1.0);
    const tr::SoftmaxPolicy reference = random_policy(1.0);
    tr::SoftmaxPolicy current = old_policy;
    std::normal_distribution<double> nudge(0.0, 0.3);
    for (Eigen::Index i = 0; i < current.logits().size(); ++i) {
      current.logits().data()[i] += nudge(rng);
    }
    std::vector<tr::ToyRollouts> batch{
      tr::sample_group(old_policy, reference, task, 0, 4, rng(), reward_cfg)};

    Eigen::MatrixXd grad;
    tr::policy_loss_gradient(current, batch, grpo, grad);
    for (Eigen::Index i = 0; i < current.logits().size(); ++i) {
      const double base = current.logits().data()[i];
      current.logits().data()[i] = base + h;
      const double up = tr::evaluate_policy_loss(current, batch, grpo).loss;
      current.logits().data()[i] = base - h;
      const double down = tr::evaluate_policy_loss(current, batch, grpo).loss;
      current.logits().data()[i] = base;
      const double fd = (up - down) / (2.0 * h);
      const double a = grad.data()[i];
      worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-7}));
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max relative error %.3g", worst);
  return {worst < 1e-4, buf};
}

// 6. Group advantage normalization.
Outcome advantage_normalization()
{
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> size(2, 16);
  std::uniform_real_distribution<double> reward(-3.0, 3.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  double worst_mean = 0.0, worst_std = 0.0, worst_affine = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd r(size(rng));
    for (auto & v : r) {
      v = reward(rng);
    }
    const Eigen::VectorXd a = tr::group_advantages(r, 1e-8);
    worst_mean = std::max(worst_mean, std::abs(a.mean()));
    const double sigma = std::sqrt((r.array() - r.mean()).square().mean());
    if (sigma > 1e-8) {
      worst_std = std::max(worst_std, std::abs(std::sqrt(a.squaredNorm() / a.size()) - 1.0));
    }
    const Eigen::VectorXd affine =
      tr::group_advantages(Eigen::VectorXd((scale(rng) * r).array() + shift(rng)), 1e-8);
    worst_affine = std::max(worst_affine, (affine - a).cwiseAbs().maxCoeff());
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max |mean| %.2g, max |std-1| %.2g, max affine drift %.2g",
    worst_mean, worst_std, worst_affine);
  return {worst_mean < 1e-12 && worst_std < 1e-9 && worst_affine < 1e-9, buf};
}

// 7. Toy trainer improves reward; a heavy KL weight pins the policy.
Outcome toy_trainer()
{
  const auto tasks = tr::default_task_set();
  const int num_tasks = static_cast<int>(tasks.size());
  int improved = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    tr::TrainConfig cfg;
    cfg.seed = seed;
    tr::SoftmaxPolicy policy(num_tasks, 6);
    const auto log = tr::train(tasks, policy, cfg);
    const double gain = log.mean_reward(cfg.iterations - 20, cfg.iterations) - log.mean_reward(0, 20);
    improved += gain >= 0.2 ? 1 : 0;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%+.3f ", gain);
    detail << buf;
  }

  tr::TrainConfig heavy;
  heavy.seed = 1;
  heavy.grpo.kl_beta = 1e3;
  heavy.step_size = 1.0 / heavy.grpo.kl_beta;
  tr::SoftmaxPolicy policy(num_tasks, 6);
  const tr::SoftmaxPolicy init = policy;
  tr::train(tasks, policy, heavy);
  const double tv = tr::max_total_variation(policy, init);

  tr::TrainConfig free = heavy;
  free.grpo.kl_beta = 0.0;
  tr::SoftmaxPolicy unpinned(num_tasks, 6);
  tr::train(tasks, unpinned, free);
  const double tv_free = tr::max_total_variation(unpinned, init);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "| %d/10 seeds gain >= 0.2 | max TV with beta=1e3: %.4f "
    "(same step, beta=0: %.4f)", improved, tv, tv_free);
  detail << buf;
  return {improved >= 9 && tv <= 0.05, "gains " + detail.str()};
}

// 8. Parser totality and round trip.
Outcome parser_totality()
{
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> len(0, 120);
  std::uniform_int_distribution<int> byte(0, 255);
  std::bernoulli_distribution structured(0.5);
  const std::string pieces[] = {"<think>", "</think>", "<output>", "</output>", "[", "]", ",",
    "7", "-", ".", " ", "\n"};
  std::uniform_int_distribution<int> piece(0, 11);
  int bad_rewards = 0, threw = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      s += structured(rng) ? pieces[piece(rng)] : std::string(1, static_cast<char>(byte(rng)));
    }
    const auto kind = trial % 2 ? tr::TaskKind::affordance : tr::TaskKind::trajectory;
    try {
      (void)tr::parse_response(s, kind);
    } catch (...) {
      ++threw;
    }
    const double r = tr::format_reward(s, kind);
    bad_rewards += (r == 0.0 || r == 1.0) ? 0 : 1;
  }

  std::uniform_real_distribution<double> real(0.0, 999.9);
  std::uniform_int_distribution<int> integer(0, 999);
  std::uniform_int_distribution<int> count(0, 8);
  std::bernoulli_distribution whole(0.5);
  const auto coordinate = [&] {
    return whole(rng) ? static_cast<double>(integer(rng)) : real(rng);
  };
  int round_trip_failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    tr::Payload payload;
    if (trial % 2) {
      tr::AffordancePayload a;
      const int n = count(rng);
      for (int i = 0; i < n; ++i) {
        a.boxes.push_back(tr::normalize_box(Box{coordinate(), coordinate(), coordinate(),
          coordinate()}).box);
      }
      payload = a;
    } else {
      const int n = std::max(2, count(rng));
      tr::PointMatrix<double> pts(n, 2);
      for (int i = 0; i < n; ++i) {
        pts.row(i) << coordinate(), coordinate();
      }
      payload = tr::TrajectoryPayload{Traj(std::move(pts))};
    }
    const auto parsed = tr::parse_response(tr::wrap_response("plan", payload), tr::kind_of(payload));
    round_trip_failures += parsed.ok() && parsed.value().payload == payload ? 0 : 1;
  }
  return {bad_rewards == 0 && threw == 0 && round_trip_failures == 0,
    std::to_string(threw) + " throws, " + std::to_string(bad_rewards) + " non-binary rewards, " +
      std::to_string(round_trip_failures) + " round-trip failures"};
}

// 9. Large trajectories.
Outcome performance()
{
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  const auto make = [&] {
    tr::PointMatrix<double> pts(1000, 2);
    for (int i = 0; i < 1000; ++i) {
      pts.row(i) << coord(rng), coord(rng);
    }
    return Traj(std::move(pts));
  };
  const Traj p = make();
  const Traj q = make();
  using clock = std::chrono::steady_clock;
  const auto time_ms = [](auto && fn) {
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = clock::now();
      volatile double sink = fn();
      (void)sink;
      best = std::min(best, std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }
    return best;
  };
  const double dfd_ms = time_ms([&] { return tr::discrete_frechet(p, q); });
  const double alaf_ms = time_ms([&] { return tr::alaf_distance(p, q, tr::AlafConfig<double>{}); });
  char buf[96];
  std::snprintf(buf, sizeof(buf), "discrete_frechet %.1f ms, alaf_distance %.1f ms", dfd_ms, alaf_ms);
  return {dfd_ms < 50.0 && alaf_ms < 50.0, buf};
}

}  // namespace

int main()
{
  struct Criterion
  {
    int number;
    const char * name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
    {1, "avg column reproduction", 1.0, avg_column},
    {2, "frechet oracle equivalence", 10.0, frechet_oracle},
    {3, "zero-weight reduction", 5.0, alaf_reduction},
    {4, "giou property suite", 2.0, giou_suite},
    {5, "grpo gradient check", 30.0, gradient_check},
    {6, "advantage normalization", 30.0, advantage_normalization},
    {7, "toy trainer improvement", 120.0, toy_trainer},
    {8, "parser totality and round trip", 30.0, parser_totality},
    {9, "performance", 30.0, performance},
  };
  int failures = 0;
  for (const auto & c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] %d %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", c.number, c.name,
      o.detail.c_str(), secs, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
    std::size(criteria));
  return failures == 0 ? 0 : 1;
}
