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

#ifndef TRAJREWARD__TOY_TRAINER_HPP_
#define TRAJREWARD__TOY_TRAINER_HPP_

#include "trajreward/geometry.hpp"
#include "trajreward/grpo.hpp"
#include "trajreward/rewards.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace trajreward
{

/// Square grid of cells over the frame. Token `row * cells_per_side + col`
/// decodes to the center of cell (col, row).
struct Grid
{
  int cells_per_side = 10;
  double extent = kFrameExtent;

  int vocabulary_size() const { return cells_per_side * cells_per_side; }
  double cell_size() const { return extent / cells_per_side; }
  int token(int col, int row) const { return row * cells_per_side + col; }
  Point2<double> cell_center(int token) const;
  /// Token of the cell containing `p` (clamped into the grid).
  int token_at(const Point2<double> & p) const;
};

/// Maps tokens to cell centers and collapses consecutive repeats.
/// Throws UnknownToken for out-of-vocabulary tokens and EmptyInput for an
/// empty sequence.
Trajectory<double> decode_tokens(std::span<const int> tokens, const Grid & grid);

struct ToyTask
{
  Point2<double> start;
  Point2<double> goal;
  Trajectory<double> gt_traj;
  std::uint64_t seed = 0;
};

/// Tokens per output of the default policy.
inline constexpr int kDefaultHorizon = 6;

/// Straight or single-bend path from start to goal, determined by `seed`,
/// sampled at `waypoints` points evenly spaced in arc length.
ToyTask make_toy_task(std::uint64_t seed, int waypoints = kDefaultHorizon);

/// Seeds of the default task set.
inline constexpr std::uint64_t kDefaultTaskSeeds[] = {11, 23, 37, 41};

std::vector<ToyTask> default_task_set(int waypoints = kDefaultHorizon);

/// Tabular softmax policy. One state per (task, step) pair; each state holds
/// one logit per grid token.
class SoftmaxPolicy
{
public:
  SoftmaxPolicy(int num_tasks, int horizon, Grid grid = {});

  int num_tasks() const { return num_tasks_; }
  int horizon() const { return horizon_; }
  int num_states() const { return num_tasks_ * horizon_; }
  const Grid & grid() const { return grid_; }

  int state(int task_index, int step) const { return task_index * horizon_ + step; }

  Eigen::MatrixXd & logits() { return logits_; }
  const Eigen::MatrixXd & logits() const { return logits_; }

  Eigen::VectorXd log_probs(int state) const;
  Eigen::VectorXd probs(int state) const;
  /// Row-wise softmax of every state.
  Eigen::MatrixXd prob_table() const;
  double log_prob(int state, int token) const;
  int sample(int state, std::mt19937_64 & rng) const;

private:
  int num_tasks_;
  int horizon_;
  Grid grid_;
  Eigen::MatrixXd logits_;
};

/// Largest per-state total-variation distance between two policies.
double max_total_variation(const SoftmaxPolicy & a, const SoftmaxPolicy & b);

/// A rollout group together with the policy state each token was drawn in.
struct ToyRollouts
{
  RolloutGroup<double> group;
  std::vector<std::vector<int>> states;
  std::vector<RewardBreakdown> rewards;
};

/// Draws n outputs for one task from `sampler` (the old policy), recording
/// its log-probabilities as both old and new, and the reference policy's
/// log-probabilities. Each output has its own random stream derived from
/// `seed` and its index. Decoded trajectories are wrapped in a response and
/// scored with `composite_reward` against the task's ground truth.
ToyRollouts sample_group(
  const SoftmaxPolicy & sampler, const SoftmaxPolicy & reference, const ToyTask & task,
  int task_index, int n, std::uint64_t seed, const RewardConfig & reward_cfg);

struct PolicyLoss
{
  double loss = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
};

/// Refreshes `logp_new` of every group from `policy` and returns the summed
/// loss over groups.
PolicyLoss evaluate_policy_loss(
  const SoftmaxPolicy & policy, std::span<ToyRollouts> rollouts, const GrpoConfig<double> & cfg);

/// As `evaluate_policy_loss`, and writes d loss / d logits into `grad`.
PolicyLoss policy_loss_gradient(
  const SoftmaxPolicy & policy, std::span<ToyRollouts> rollouts, const GrpoConfig<double> & cfg,
  Eigen::MatrixXd & grad);

struct TrainConfig
{
  int iterations = 200;
  int group_size = 48;
  double step_size = 1.0;
  /// Gradient steps per sampled batch; pi_old is refreshed once per iteration.
  int updates_per_iteration = 2;
  std::uint64_t seed = 0;
  GrpoConfig<double> grpo;
  RewardConfig reward;

  void validate() const;
};

struct TrainLogEntry
{
  int iteration = 0;
  int update = 0;
  double mean_reward = 0.0;  // mean composite reward of the batch sampled this iteration
  double loss = 0.0;         // loss before this step
  double kl = 0.0;
  double clip_fraction = 0.0;
};

/// One entry per optimizer step.
struct TrainLog
{
  std::vector<TrainLogEntry> entries;

  /// Sampled mean reward of each iteration, in order.
  std::vector<double> iteration_rewards() const;
  /// Mean sampled reward over iterations [first, last).
  double mean_reward(int first, int last) const;

  void write_csv(std::ostream & out) const;
};

/// On-policy training: each iteration samples one group per task from the
/// current policy, then takes `updates_per_iteration` plain gradient steps
/// on the summed loss. The reference policy is the policy as passed in.
TrainLog train(std::span<const ToyTask> tasks, SoftmaxPolicy & policy, const TrainConfig & cfg);

}  // namespace trajreward

#endif  // TRAJREWARD__TOY_TRAINER_HPP_
