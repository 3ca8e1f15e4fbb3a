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

#include "trajreward/rewards.hpp"

#include "trajreward/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trajreward
{

void RewardConfig::validate() const
{
  alaf.validate();
  if (!(norm_scale > 0.0) || !std::isfinite(norm_scale)) {
    throw ConfigError("norm_scale must be finite and > 0");
  }
  if (!(w_task >= 0.0) || !(w_format >= 0.0)) {
    throw ConfigError("w_task and w_format must be >= 0");
  }
  if (std::abs(w_task + w_format - 1.0) > 1e-12) {
    throw ConfigError("w_task + w_format must equal 1");
  }
  if (!std::isfinite(parse_fail_task_reward)) {
    throw ConfigError("parse_fail_task_reward must be finite");
  }
}

double normalize_distance(double distance, const RewardConfig & cfg)
{
  if (cfg.normalization == DistanceNormalization::linear) {
    return std::min(distance / cfg.norm_scale, 1.0);
  }
  return distance / (distance + cfg.norm_scale);
}

double traj_reward(
  const Trajectory<double> & pred, const Trajectory<double> & gt, const RewardConfig & cfg)
{
  return 1.0 - normalize_distance(alaf_distance(pred, gt, cfg.alaf), cfg);
}

double affordance_reward(const Box<double> & pred, const Box<double> & gt)
{
  return giou(pred, gt);
}

double best_affordance_reward(std::span<const Box<double>> preds, std::span<const Box<double>> gts)
{
  if (preds.empty() || gts.empty()) {
    throw std::invalid_argument("best_affordance_reward needs boxes on both sides");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto & p : preds) {
    for (const auto & g : gts) {
      best = std::max(best, affordance_reward(p, g));
    }
  }
  return best;
}

RewardBreakdown composite_reward(
  std::string_view raw, const Payload & ground_truth, TaskKind kind, const RewardConfig & cfg)
{
  if (kind_of(ground_truth) != kind) {
    throw std::invalid_argument("ground truth payload does not match the task kind");
  }
  RewardBreakdown r;
  const ParseResult parsed = parse_response(raw, kind);
  if (!parsed.ok()) {
    r.format = 0.0;
    r.task = cfg.parse_fail_task_reward;
  } else {
    r.format = 1.0;
    const Payload & pred = parsed.value().payload;
    if (kind == TaskKind::trajectory) {
      r.task = traj_reward(
        std::get<TrajectoryPayload>(pred).waypoints,
        std::get<TrajectoryPayload>(ground_truth).waypoints, cfg);
    } else {
      const auto & pb = std::get<AffordancePayload>(pred).boxes;
      const auto & gb = std::get<AffordancePayload>(ground_truth).boxes;
      if (pb.empty() || gb.empty()) {
        r.task = pb.empty() && gb.empty() ? 1.0 : cfg.parse_fail_task_reward;
      } else {
        r.task = best_affordance_reward(pb, gb);
      }
    }
  }
  r.total = cfg.w_task * r.task + cfg.w_format * r.format;
  return r;
}

}  // namespace trajreward
