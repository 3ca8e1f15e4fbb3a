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

#ifndef TRAJREWARD__GRPO_HPP_
#define TRAJREWARD__GRPO_HPP_

#include "trajreward/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace trajreward
{

template <typename Scalar>
struct GrpoConfig
{
  Scalar clip_eps = Scalar(0.2);
  Scalar kl_beta = Scalar(0.04);
  Scalar std_floor = Scalar(1e-8);
  /// Adds a 1/n factor over the group. Off by default: the objective sums over outputs.
  bool mean_over_group = false;

  void validate() const
  {
    if (!(clip_eps > Scalar(0) && clip_eps < Scalar(1))) {
      throw ConfigError("clip_eps must lie in (0, 1)");
    }
    if (!(kl_beta >= Scalar(0)) || !std::isfinite(kl_beta)) {
      throw ConfigError("kl_beta must be finite and >= 0");
    }
    if (!(std_floor > Scalar(0))) {
      throw ConfigError("std_floor must be > 0");
    }
  }
};

/// n sampled outputs with aligned per-token log-probabilities under the
/// sampling, current and reference policies, and one reward per output.
template <typename Scalar>
struct RolloutGroup
{
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<std::vector<int>> outputs;
  std::vector<Vector> logp_old;
  std::vector<Vector> logp_new;
  std::vector<Vector> logp_ref;
  Vector rewards;

  std::size_t size() const { return outputs.size(); }

  void validate() const
  {
    const std::size_t n = outputs.size();
    if (n < 2) {
      throw GroupTooSmall("a rollout group needs at least 2 outputs, got " + std::to_string(n));
    }
    if (logp_old.size() != n || logp_new.size() != n || logp_ref.size() != n ||
      static_cast<std::size_t>(rewards.size()) != n)
    {
      throw std::invalid_argument("rollout group fields disagree on the number of outputs");
    }
    for (std::size_t g = 0; g < n; ++g) {
      const auto len = static_cast<Eigen::Index>(outputs[g].size());
      if (len == 0) {
        throw std::invalid_argument("rollout outputs must contain at least one token");
      }
      for (const Vector * lp : {&logp_old[g], &logp_new[g], &logp_ref[g]}) {
        if (lp->size() != len) {
          throw std::invalid_argument("log-probabilities must align with output tokens");
        }
        if (!lp->allFinite() || (lp->array() > Scalar(0)).any()) {
          throw std::invalid_argument("log-probabilities must be finite and <= 0");
        }
      }
    }
  }
};

/// Group-relative advantages (r - mean) / max(population std, std_floor).
/// A group whose rewards are all identical gets exactly zero advantages.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> group_advantages(
  const Eigen::MatrixBase<Derived> & rewards, typename Derived::Scalar std_floor)
{
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (rewards.size() < 2) {
    throw GroupTooSmall(
      "group advantages need at least 2 rewards, got " + std::to_string(rewards.size()));
  }
  if (rewards.maxCoeff() == rewards.minCoeff()) {
    return Vector::Zero(rewards.size());
  }
  const Vector r = rewards;
  const Vector centered = r.array() - r.mean();
  const Scalar sigma = std::sqrt(centered.squaredNorm() / static_cast<Scalar>(r.size()));
  return centered / std::max(sigma, std_floor);
}

/// pi_new / pi_old for one token, from log-probabilities.
template <typename Scalar>
Scalar token_ratio(Scalar logp_new, Scalar logp_old)
{
  return std::exp(logp_new - logp_old);
}

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
template <typename Scalar>
Scalar clipped_term(Scalar ratio, Scalar advantage, Scalar eps)
{
  const Scalar clipped = std::clamp(ratio, Scalar(1) - eps, Scalar(1) + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

/// Per-token k3 estimate of KL(pi_new || pi_ref): exp(d) - d - 1 with
/// d = logp_ref - logp_new. Non-negative, zero only when d = 0.
template <typename Scalar>
Scalar kl_penalty(Scalar logp_new, Scalar logp_ref)
{
  const Scalar d = logp_ref - logp_new;
  return std::expm1(d) - d;
}

template <typename Scalar>
struct GrpoLossTerms
{
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar loss = Scalar(0);
  Scalar mean_kl = Scalar(0);        // token-averaged k3 estimate
  Scalar clip_fraction = Scalar(0);  // share of tokens where the clipped branch binds
  Vector advantages;
  /// d loss / d logp_new for every token, aligned with `group.outputs`.
  std::vector<Vector> grad_logp_new;
};

/// Clipped group-relative objective with KL penalty, negated for
/// minimization, together with its gradient with respect to the current
/// policy's token log-probabilities.
template <typename Scalar>
GrpoLossTerms<Scalar> grpo_loss_terms(
  const RolloutGroup<Scalar> & group, const GrpoConfig<Scalar> & cfg)
{
  group.validate();
  GrpoLossTerms<Scalar> out;
  out.advantages = group_advantages(group.rewards, cfg.std_floor);
  const std::size_t n = group.size();
  const Scalar group_scale =
    cfg.mean_over_group ? Scalar(1) / static_cast<Scalar>(n) : Scalar(1);

  std::size_t tokens = 0;
  std::size_t clipped_tokens = 0;
  Scalar kl_sum(0);
  Scalar objective(0);
  out.grad_logp_new.resize(n);
  for (std::size_t g = 0; g < n; ++g) {
    const Eigen::Index len = static_cast<Eigen::Index>(group.outputs[g].size());
    const Scalar adv = out.advantages(static_cast<Eigen::Index>(g));
    const Scalar token_scale = group_scale / static_cast<Scalar>(len);
    auto & grad = out.grad_logp_new[g];
    grad.resize(len);
    Scalar per_output(0);
    for (Eigen::Index k = 0; k < len; ++k) {
      const Scalar lnew = group.logp_new[g](k);
      const Scalar ratio = token_ratio(lnew, group.logp_old[g](k));
      const Scalar unclipped = ratio * adv;
      const Scalar clipped =
        std::clamp(ratio, Scalar(1) - cfg.clip_eps, Scalar(1) + cfg.clip_eps) * adv;
      const Scalar kl = kl_penalty(lnew, group.logp_ref[g](k));
      per_output += std::min(unclipped, clipped) - cfg.kl_beta * kl;
      kl_sum += kl;

      // The surrogate only carries gradient where the unclipped branch is the
      // minimum, or where clipping leaves the ratio untouched.
      Scalar d_surrogate(0);
      if (unclipped <= clipped) {
        d_surrogate = ratio * adv;
      } else {
        ++clipped_tokens;
      }
      const Scalar d_kl = -std::expm1(group.logp_ref[g](k) - lnew);
      grad(k) = -token_scale * (d_surrogate - cfg.kl_beta * d_kl);
    }
    objective += token_scale * per_output;
    tokens += static_cast<std::size_t>(len);
  }
  out.loss = -objective;
  out.mean_kl = kl_sum / static_cast<Scalar>(tokens);
  out.clip_fraction = static_cast<Scalar>(clipped_tokens) / static_cast<Scalar>(tokens);
  return out;
}

template <typename Scalar>
Scalar grpo_loss(const RolloutGroup<Scalar> & group, const GrpoConfig<Scalar> & cfg)
{
  return grpo_loss_terms(group, cfg).loss;
}

}  // namespace trajreward

#endif  // TRAJREWARD__GRPO_HPP_
