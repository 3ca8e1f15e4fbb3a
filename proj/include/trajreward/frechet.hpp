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

#ifndef TRAJREWARD__FRECHET_HPP_
#define TRAJREWARD__FRECHET_HPP_

#include "trajreward/errors.hpp"
#include "trajreward/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace trajreward
{

/// Weights of the angle and length-ratio penalties, in coordinate units per
/// radian and per log-ratio unit.
template <typename Scalar>
struct AlafConfig
{
  Scalar lambda_theta = Scalar(10);
  Scalar lambda_r = Scalar(10);

  void validate() const
  {
    if (!std::isfinite(lambda_theta) || lambda_theta < Scalar(0)) {
      throw ConfigError("lambda_theta must be finite and >= 0");
    }
    if (!std::isfinite(lambda_r) || lambda_r < Scalar(0)) {
      throw ConfigError("lambda_r must be finite and >= 0");
    }
  }
};

/// The three terms of the augmented pair cost, before weighting.
template <typename Scalar>
struct PairCost
{
  Scalar position;
  Scalar angle;         // radians in [0, pi]
  Scalar length_ratio;  // |log a_len - log b_len|

  Scalar weighted(const AlafConfig<Scalar> & cfg) const
  {
    return position + cfg.lambda_theta * angle + cfg.lambda_r * length_ratio;
  }
};

/// Absolute difference of two headings, folded into [0, pi].
template <typename Scalar>
Scalar heading_gap(Scalar a, Scalar b)
{
  const Scalar d = std::abs(a - b);
  return d > Scalar(EIGEN_PI) ? Scalar(2 * EIGEN_PI) - d : d;
}

/// Angle in [0, pi] between two 2-vectors, from their headings. Identical
/// directions give exactly 0.
template <typename Scalar>
Scalar angle_between(const Point2<Scalar> & a, const Point2<Scalar> & b)
{
  return heading_gap(std::atan2(a.y(), a.x()), std::atan2(b.y(), b.x()));
}

template <typename Scalar>
PairCost<Scalar> pair_cost_terms(
  const Point2<Scalar> & a_point, const Point2<Scalar> & a_tangent, Scalar a_len,
  const Point2<Scalar> & b_point, const Point2<Scalar> & b_tangent, Scalar b_len)
{
  return {
    (a_point - b_point).norm(),
    angle_between(a_tangent, b_tangent),
    std::abs(std::log(a_len) - std::log(b_len))};
}

template <typename Scalar>
Scalar pair_cost(
  const Point2<Scalar> & a_point, const Point2<Scalar> & a_tangent, Scalar a_len,
  const Point2<Scalar> & b_point, const Point2<Scalar> & b_tangent, Scalar b_len,
  const AlafConfig<Scalar> & cfg)
{
  return pair_cost_terms(a_point, a_tangent, a_len, b_point, b_tangent, b_len).weighted(cfg);
}

namespace detail
{
// Shared by the plain and augmented distances so zero weights reproduce the
// plain result bit for bit.
template <typename Scalar>
Scalar point_distance(
  const PointMatrix<Scalar> & a, Eigen::Index i, const PointMatrix<Scalar> & b, Eigen::Index j)
{
  const Scalar dx = a(i, 0) - b(j, 0);
  const Scalar dy = a(i, 1) - b(j, 1);
  return std::sqrt(dx * dx + dy * dy);
}

template <typename Scalar, typename CostFn>
Scalar frechet_rows(Eigen::Index n, Eigen::Index m, CostFn & cost)
{
  std::vector<Scalar> row(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar diag = Scalar(0);  // ca(i-1, j-1)
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const Scalar d = cost(i, j);
      const Scalar up = row[ju];  // ca(i-1, j)
      Scalar next;
      if (i == 0 && j == 0) {
        next = d;
      } else if (i == 0) {
        next = std::max(d, row[ju - 1]);
      } else if (j == 0) {
        next = std::max(d, up);
      } else {
        next = std::max(d, std::min({up, diag, row[ju - 1]}));
      }
      diag = up;
      row[ju] = next;
    }
  }
  return row.back();
}
}  // namespace detail

/// Min over monotone couplings of the max coupled cost, for an n x m cost
/// `cost(i, j)`. Keeps one DP row over the shorter side.
template <typename Scalar, typename CostFn>
Scalar frechet_dp(Eigen::Index n, Eigen::Index m, CostFn && cost)
{
  if (n <= 0 || m <= 0) {
    throw std::invalid_argument("frechet_dp needs non-empty sequences");
  }
  if (m > n) {
    auto transposed = [&cost](Eigen::Index i, Eigen::Index j) { return cost(j, i); };
    return detail::frechet_rows<Scalar>(m, n, transposed);
  }
  return detail::frechet_rows<Scalar>(n, m, cost);
}

/// Discrete Fréchet distance under Euclidean point distance.
template <typename Scalar>
Scalar discrete_frechet(const Trajectory<Scalar> & p, const Trajectory<Scalar> & q)
{
  const auto & a = p.points();
  const auto & b = q.points();
  return frechet_dp<Scalar>(a.rows(), b.rows(), [&](Eigen::Index i, Eigen::Index j) {
    return detail::point_distance(a, i, b, j);
  });
}

/// Augmented Fréchet distance between a prediction and a ground truth.
///
/// Both inputs are deduplicated before features are computed. The pair cost
/// adds weighted tangent-angle and log segment-length-ratio penalties to the
/// Euclidean term; with both weights zero the result is bit-identical to
/// `discrete_frechet` on the deduplicated inputs.
template <typename Scalar>
Scalar alaf_distance(
  const Trajectory<Scalar> & pred, const Trajectory<Scalar> & gt, const AlafConfig<Scalar> & cfg)
{
  const Trajectory<Scalar> p = dedup(pred);
  const Trajectory<Scalar> g = dedup(gt);
  const TrajectoryFeatures<Scalar> pf = compute_features(p);
  const TrajectoryFeatures<Scalar> gf = compute_features(g);
  const auto & a = p.points();
  const auto & b = g.points();
  // Per-point headings and log lengths keep the inner loop free of atan2/log.
  const auto headings = [](const TrajectoryFeatures<Scalar> & f) {
    VectorX<Scalar> h(f.tangents.rows());
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      h(i) = std::atan2(f.tangents(i, 1), f.tangents(i, 0));
    }
    return h;
  };
  const VectorX<Scalar> ah = headings(pf);
  const VectorX<Scalar> bh = headings(gf);
  const VectorX<Scalar> al = pf.seg_lengths.array().log();
  const VectorX<Scalar> bl = gf.seg_lengths.array().log();
  return frechet_dp<Scalar>(a.rows(), b.rows(), [&](Eigen::Index i, Eigen::Index j) {
    const Scalar position = detail::point_distance(a, i, b, j);
    const Scalar angle = heading_gap(ah(i), bh(j));
    const Scalar length_ratio = std::abs(al(i) - bl(j));
    return position + cfg.lambda_theta * angle + cfg.lambda_r * length_ratio;
  });
}

/// Largest side length `frechet_bruteforce` will enumerate.
inline constexpr Eigen::Index kBruteforceMaxPoints = 7;

namespace detail
{
template <typename Scalar, typename CostFn>
void enumerate_couplings(
  Eigen::Index i, Eigen::Index j, Eigen::Index n, Eigen::Index m, Scalar worst,
  CostFn & cost, Scalar & best)
{
  worst = std::max(worst, static_cast<Scalar>(cost(i, j)));
  if (i == n - 1 && j == m - 1) {
    best = std::min(best, worst);
    return;
  }
  if (i + 1 < n) {
    enumerate_couplings(i + 1, j, n, m, worst, cost, best);
  }
  if (j + 1 < m) {
    enumerate_couplings(i, j + 1, n, m, worst, cost, best);
  }
  if (i + 1 < n && j + 1 < m) {
    enumerate_couplings(i + 1, j + 1, n, m, worst, cost, best);
  }
}
}  // namespace detail

/// Test oracle: walks every monotone coupling path explicitly and returns the
/// smallest path maximum. Refuses instances with more than 7 points a side.
template <typename Scalar, typename CostFn>
Scalar frechet_bruteforce(Eigen::Index n, Eigen::Index m, CostFn && cost)
{
  if (n <= 0 || m <= 0) {
    throw std::invalid_argument("frechet_bruteforce needs non-empty sequences");
  }
  if (n > kBruteforceMaxPoints || m > kBruteforceMaxPoints) {
    throw InstanceTooLarge(
      "frechet_bruteforce enumerates at most " + std::to_string(kBruteforceMaxPoints) +
      " points per side, got " + std::to_string(n) + "x" + std::to_string(m));
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  detail::enumerate_couplings<Scalar>(
    0, 0, n, m, -std::numeric_limits<Scalar>::infinity(), cost, best);
  return best;
}

template <typename Scalar>
Scalar frechet_bruteforce(const Trajectory<Scalar> & p, const Trajectory<Scalar> & q)
{
  return frechet_bruteforce<Scalar>(p.size(), q.size(), [&](Eigen::Index i, Eigen::Index j) {
    const Point2<Scalar> d = p.point(i) - q.point(j);
    return std::sqrt(d.x() * d.x() + d.y() * d.y());
  });
}

}  // namespace trajreward

#endif  // TRAJREWARD__FRECHET_HPP_
