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

#ifndef TRAJREWARD__REWARDS_HPP_
#define TRAJREWARD__REWARDS_HPP_

#include "trajreward/frechet.hpp"
#include "trajreward/geometry.hpp"
#include "trajreward/metrics.hpp"
#include "trajreward/response_format.hpp"

#include <span>
#include <string_view>

namespace trajreward
{

/// How a raw augmented Fréchet distance D is mapped into [0, 1].
enum class DistanceNormalization {
  rational,  // D / (D + norm_scale)
  linear,    // min(D / norm_scale, 1)
};

struct RewardConfig
{
  AlafConfig<double> alaf;
  double norm_scale = 100.0;
  double w_task = 0.9;
  double w_format = 0.1;
  /// Task reward assigned when the response cannot be parsed.
  double parse_fail_task_reward = 0.0;
  DistanceNormalization normalization = DistanceNormalization::rational;

  void validate() const;
};

double normalize_distance(double distance, const RewardConfig & cfg);

/// 1 - normalized augmented Fréchet distance of `pred` against `gt`.
double traj_reward(
  const Trajectory<double> & pred, const Trajectory<double> & gt, const RewardConfig & cfg);

/// GIoU of the predicted box against the ground-truth box.
double affordance_reward(const Box<double> & pred, const Box<double> & gt);

/// Best GIoU over all predicted and ground-truth box pairs.
double best_affordance_reward(std::span<const Box<double>> preds, std::span<const Box<double>> gts);

struct RewardBreakdown
{
  double total = 0.0;
  double task = 0.0;
  double format = 0.0;
};

/// w_task * task reward + w_format * format reward for one raw response.
///
/// A response that fails to parse gets format 0 and task
/// `parse_fail_task_reward`. For affordance, an empty prediction is only
/// rewarded (task 1) when the ground truth is also empty; an empty prediction
/// against a real box, or a non-empty one against an empty ground truth, gets
/// `parse_fail_task_reward`. Extra predicted boxes are not penalized.
RewardBreakdown composite_reward(
  std::string_view raw, const Payload & ground_truth, TaskKind kind, const RewardConfig & cfg);

}  // namespace trajreward

#endif  // TRAJREWARD__REWARDS_HPP_
