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

#include "trajreward/toy_trainer.hpp"

#include "trajreward/errors.hpp"
#include "trajreward/response_format.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace trajreward
{

namespace
{

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0)
{
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

double log_sum_exp(const Eigen::VectorXd & v)
{
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

constexpr std::string_view kToyThink = "move along the planned path";

}  // namespace

Point2<double> Grid::cell_center(int token) const
{
  if (token < 0 || token >= vocabulary_size()) {
    throw UnknownToken("token " + std::to_string(token) + " outside a vocabulary of " +
      std::to_string(vocabulary_size()));
  }
  const int col = token % cells_per_side;
  const int row = token / cells_per_side;
  return {(col + 0.5) * cell_size(), (row + 0.5) * cell_size()};
}

int Grid::token_at(const Point2<double> & p) const
{
  const auto cell = [&](double v) {
    return std::clamp(static_cast<int>(std::floor(v / cell_size())), 0, cells_per_side - 1);
  };
  return token(cell(p.x()), cell(p.y()));
}

Trajectory<double> decode_tokens(std::span<const int> tokens, const Grid & grid)
{
  if (tokens.empty()) {
    throw EmptyInput("cannot decode an empty token sequence");
  }
  PointMatrix<double> pts(static_cast<Eigen::Index>(tokens.size()), 2);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = grid.cell_center(tokens[i]).transpose();
  }
  return dedup(Trajectory<double>(std::move(pts)));
}

ToyTask make_toy_task(std::uint64_t seed, int waypoints)
{
  if (waypoints < 2) {
    throw std::invalid_argument("a toy task needs at least two waypoints");
  }
  std::mt19937_64 rng(mix(seed, 0x7a5c));
  std::uniform_real_distribution<double> coord(100.0, 900.0);
  Point2<double> start, goal;
  do {
    start = {coord(rng), coord(rng)};
    goal = {coord(rng), coord(rng)};
  } while ((goal - start).norm() < 400.0);

  std::bernoulli_distribution bend(0.5);
  PointMatrix<double> pts;
  if (bend(rng)) {
    std::uniform_real_distribution<double> offset(120.0, 250.0);
    std::bernoulli_distribution side(0.5);
    const Point2<double> dir = (goal - start).normalized();
    const Point2<double> normal(-dir.y(), dir.x());
    Point2<double> mid = 0.5 * (start + goal) + (side(rng) ? 1.0 : -1.0) * offset(rng) * normal;
    mid = mid.cwiseMax(50.0).cwiseMin(950.0);
    pts.resize(3, 2);
    pts.row(1) = mid.transpose();
  } else {
    pts.resize(2, 2);
  }
  pts.row(0) = start.transpose();
  pts.row(pts.rows() - 1) = goal.transpose();
  return ToyTask{start, goal, resample(Trajectory<double>(std::move(pts)), waypoints), seed};
}

std::vector<ToyTask> default_task_set(int waypoints)
{
  std::vector<ToyTask> tasks;
  for (const auto seed : kDefaultTaskSeeds) {
    tasks.push_back(make_toy_task(seed, waypoints));
  }
  return tasks;
}

SoftmaxPolicy::SoftmaxPolicy(int num_tasks, int horizon, Grid grid)
: num_tasks_(num_tasks), horizon_(horizon), grid_(grid)
{
  if (num_tasks < 1 || horizon < 1 || grid.cells_per_side < 1) {
    throw std::invalid_argument("policy needs at least one task, step and grid cell");
  }
  logits_ = Eigen::MatrixXd::Zero(num_states(), grid_.vocabulary_size());
}

Eigen::VectorXd SoftmaxPolicy::log_probs(int state) const
{
  const Eigen::VectorXd row = logits_.row(state).transpose();
  return row.array() - log_sum_exp(row);
}

Eigen::VectorXd SoftmaxPolicy::probs(int state) const
{
  return log_probs(state).array().exp();
}

Eigen::MatrixXd SoftmaxPolicy::prob_table() const
{
  Eigen::MatrixXd table(logits_.rows(), logits_.cols());
  for (int s = 0; s < num_states(); ++s) {
    table.row(s) = probs(s).transpose();
  }
  return table;
}

double SoftmaxPolicy::log_prob(int state, int token) const
{
  const Eigen::VectorXd row = logits_.row(state).transpose();
  return row(token) - log_sum_exp(row);
}

int SoftmaxPolicy::sample(int state, std::mt19937_64 & rng) const
{
  const Eigen::VectorXd p = probs(state);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cum = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    cum += p(a);
    if (u < cum) {
      return static_cast<int>(a);
    }
  }
  return static_cast<int>(p.size() - 1);
}

double max_total_variation(const SoftmaxPolicy & a, const SoftmaxPolicy & b)
{
  if (a.logits().rows() != b.logits().rows() || a.logits().cols() != b.logits().cols()) {
    throw std::invalid_argument("policies have different shapes");
  }
  const Eigen::MatrixXd diff = a.prob_table() - b.prob_table();
  return 0.5 * diff.cwiseAbs().rowwise().sum().maxCoeff();
}

ToyRollouts sample_group(
  const SoftmaxPolicy & sampler, const SoftmaxPolicy & reference, const ToyTask & task,
  int task_index, int n, std::uint64_t seed, const RewardConfig & reward_cfg)
{
  if (n < 2) {
    throw GroupTooSmall("sample_group needs n >= 2, got " + std::to_string(n));
  }
  const int horizon = sampler.horizon();
  const Payload ground_truth = TrajectoryPayload{task.gt_traj};

  ToyRollouts out;
  auto & group = out.group;
  group.outputs.resize(static_cast<std::size_t>(n));
  group.logp_old.resize(static_cast<std::size_t>(n));
  group.logp_ref.resize(static_cast<std::size_t>(n));
  group.rewards.resize(n);
  out.states.resize(static_cast<std::size_t>(n));
  out.rewards.resize(static_cast<std::size_t>(n));

  for (int g = 0; g < n; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(g) + 1));
    auto & tokens = group.outputs[gi];
    auto & states = out.states[gi];
    group.logp_old[gi].resize(horizon);
    group.logp_ref[gi].resize(horizon);
    for (int k = 0; k < horizon; ++k) {
      const int s = sampler.state(task_index, k);
      const int token = sampler.sample(s, rng);
      tokens.push_back(token);
      states.push_back(s);
      group.logp_old[gi](k) = sampler.log_prob(s, token);
      group.logp_ref[gi](k) = reference.log_prob(s, token);
    }
    const Trajectory<double> decoded = decode_tokens(tokens, sampler.grid());
    const std::string response = wrap_response(kToyThink, TrajectoryPayload{decoded});
    out.rewards[gi] = composite_reward(response, ground_truth, TaskKind::trajectory, reward_cfg);
    group.rewards(g) = out.rewards[gi].total;
  }
  group.logp_new = group.logp_old;
  return out;
}

namespace
{

PolicyLoss accumulate_loss(
  const SoftmaxPolicy & policy, std::span<ToyRollouts> rollouts, const GrpoConfig<double> & cfg,
  Eigen::MatrixXd * grad)
{
  PolicyLoss total;
  if (grad) {
    grad->setZero(policy.logits().rows(), policy.logits().cols());
  }
  const Eigen::MatrixXd probs = grad ? policy.prob_table() : Eigen::MatrixXd();
  for (auto & r : rollouts) {
    auto & group = r.group;
    for (std::size_t g = 0; g < group.size(); ++g) {
      for (std::size_t k = 0; k < group.outputs[g].size(); ++k) {
        group.logp_new[g](static_cast<Eigen::Index>(k)) =
          policy.log_prob(r.states[g][k], group.outputs[g][k]);
      }
    }
    const GrpoLossTerms<double> terms = grpo_loss_terms(group, cfg);
    total.loss += terms.loss;
    total.mean_kl += terms.mean_kl;
    total.clip_fraction += terms.clip_fraction;
    if (!grad) {
      continue;
    }
    // d logp(token | s) / d logits(s, :) = onehot(token) - softmax(s).
    for (std::size_t g = 0; g < group.size(); ++g) {
      for (std::size_t k = 0; k < group.outputs[g].size(); ++k) {
        const int s = r.states[g][k];
        const double upstream = terms.grad_logp_new[g](static_cast<Eigen::Index>(k));
        grad->row(s) -= upstream * probs.row(s);
        (*grad)(s, group.outputs[g][k]) += upstream;
      }
    }
  }
  if (!rollouts.empty()) {
    total.mean_kl /= static_cast<double>(rollouts.size());
    total.clip_fraction /= static_cast<double>(rollouts.size());
  }
  return total;
}

}  // namespace

PolicyLoss evaluate_policy_loss(
  const SoftmaxPolicy & policy, std::span<ToyRollouts> rollouts, const GrpoConfig<double> & cfg)
{
  return accumulate_loss(policy, rollouts, cfg, nullptr);
}

PolicyLoss policy_loss_gradient(
  const SoftmaxPolicy & policy, std::span<ToyRollouts> rollouts, const GrpoConfig<double> & cfg,
  Eigen::MatrixXd & grad)
{
  return accumulate_loss(policy, rollouts, cfg, &grad);
}

void TrainConfig::validate() const
{
  if (iterations < 0) {
    throw ConfigError("iterations must be >= 0");
  }
  if (group_size < 2) {
    throw ConfigError("group_size must be >= 2");
  }
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ConfigError("step_size must be finite and > 0");
  }
  if (updates_per_iteration < 1) {
    throw ConfigError("updates_per_iteration must be >= 1");
  }
  grpo.validate();
  reward.validate();
}

std::vector<double> TrainLog::iteration_rewards() const
{
  std::vector<double> out;
  int last = -1;
  for (const auto & e : entries) {
    if (e.iteration != last) {
      out.push_back(e.mean_reward);
      last = e.iteration;
    }
  }
  return out;
}

double TrainLog::mean_reward(int first, int last) const
{
  const auto rewards = iteration_rewards();
  first = std::max(first, 0);
  last = std::min(last, static_cast<int>(rewards.size()));
  if (first >= last) {
    throw EmptyInput("no iterations in the requested range");
  }
  double sum = 0.0;
  for (int i = first; i < last; ++i) {
    sum += rewards[static_cast<std::size_t>(i)];
  }
  return sum / (last - first);
}

void TrainLog::write_csv(std::ostream & out) const
{
  out << "iteration,update,mean_reward,loss,kl,clip_fraction\n";
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  for (const auto & e : entries) {
    out << e.iteration << ',' << e.update << ',' << e.mean_reward << ',' << e.loss << ',' << e.kl
        << ',' << e.clip_fraction << '\n';
  }
  out.flags(old_flags);
  out.precision(old_precision);
}

TrainLog train(std::span<const ToyTask> tasks, SoftmaxPolicy & policy, const TrainConfig & cfg)
{
  cfg.validate();
  if (static_cast<int>(tasks.size()) > policy.num_tasks()) {
    throw std::invalid_argument("policy has fewer task states than the task set");
  }
  TrainLog log;
  const SoftmaxPolicy reference = policy;
  Eigen::MatrixXd grad;
  for (int it = 0; it < cfg.iterations; ++it) {
    const SoftmaxPolicy old_policy = policy;
    std::vector<ToyRollouts> batch;
    double reward_sum = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const auto seed = mix(cfg.seed, static_cast<std::uint64_t>(it), t);
      batch.push_back(sample_group(
        old_policy, reference, tasks[t], static_cast<int>(t), cfg.group_size, seed, cfg.reward));
      reward_sum += batch.back().group.rewards.mean();
    }
    const double mean_reward = reward_sum / static_cast<double>(tasks.size());

    for (int u = 0; u < cfg.updates_per_iteration; ++u) {
      const PolicyLoss loss = policy_loss_gradient(policy, batch, cfg.grpo, grad);
      policy.logits() -= cfg.step_size * grad;
      log.entries.push_back({it, u, mean_reward, loss.loss, loss.mean_kl, loss.clip_fraction});
    }
  }
  return log;
}

}  // namespace trajreward
