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

#ifndef TRAJREWARD__METRICS_HPP_
#define TRAJREWARD__METRICS_HPP_

#include "trajreward/errors.hpp"
#include "trajreward/frechet.hpp"
#include "trajreward/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>

namespace trajreward
{

/// Axis-aligned box (x1, y1) - (x2, y2).
template <typename Scalar>
struct Box
{
  Scalar x1 = Scalar(0);
  Scalar y1 = Scalar(0);
  Scalar x2 = Scalar(0);
  Scalar y2 = Scalar(0);

  Scalar width() const { return std::max(x2 - x1, Scalar(0)); }
  Scalar height() const { return std::max(y2 - y1, Scalar(0)); }
  Scalar area() const { return width() * height(); }

  bool operator==(const Box &) const = default;
};

template <typename Scalar>
struct NormalizedBox
{
  Box<Scalar> box;
  bool flagged = false;  // corners swapped or coordinates clamped
};

/// Orders the corners so x1 <= x2 and y1 <= y2 and clamps into the frame.
template <typename Scalar>
NormalizedBox<Scalar> normalize_box(Box<Scalar> b)
{
  bool flagged = false;
  flagged |= clamp_coordinate(b.x1);
  flagged |= clamp_coordinate(b.y1);
  flagged |= clamp_coordinate(b.x2);
  flagged |= clamp_coordinate(b.y2);
  if (b.x1 > b.x2) {
    std::swap(b.x1, b.x2);
    flagged = true;
  }
  if (b.y1 > b.y2) {
    std::swap(b.y1, b.y2);
    flagged = true;
  }
  return {b, flagged};
}

template <typename Scalar>
Scalar intersection_area(const Box<Scalar> & a, const Box<Scalar> & b)
{
  const Scalar w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const Scalar h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= Scalar(0) || h <= Scalar(0)) {
    return Scalar(0);
  }
  return w * h;
}

template <typename Scalar>
Box<Scalar> enclosing_box(const Box<Scalar> & a, const Box<Scalar> & b)
{
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
}

/// Intersection over union; 0 when the union has no area.
template <typename Scalar>
Scalar box_iou(const Box<Scalar> & a, const Box<Scalar> & b)
{
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  if (uni <= Scalar(0)) {
    return Scalar(0);
  }
  return inter / uni;
}

/// Generalized IoU: IoU minus the share of the smallest enclosing box not
/// covered by the union. Lies in (-1, 1]. Pairs without union area score 0.
template <typename Scalar>
Scalar giou(const Box<Scalar> & a, const Box<Scalar> & b)
{
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  if (uni <= Scalar(0)) {
    return Scalar(0);
  }
  const Scalar iou = inter / uni;
  const Scalar hull = enclosing_box(a, b).area();
  // Rounding can leave the hull a hair below the union.
  return iou - std::max(Scalar(0), hull - uni) / hull;
}

/// Largest nearest-point distance from the waypoints of `a` to those of `b`.
template <typename Scalar>
Scalar directed_hausdorff(const Trajectory<Scalar> & a, const Trajectory<Scalar> & b)
{
  Scalar worst(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Scalar nearest = (b.points().rowwise() - a.points().row(i)).rowwise().norm().minCoeff();
    worst = std::max(worst, nearest);
  }
  return worst;
}

template <typename Scalar>
Scalar point_segment_distance(
  const Point2<Scalar> & p, const Point2<Scalar> & s0, const Point2<Scalar> & s1)
{
  const Point2<Scalar> d = s1 - s0;
  const Scalar len2 = d.squaredNorm();
  if (len2 <= Scalar(0)) {
    return (p - s0).norm();
  }
  const Scalar t = std::clamp((p - s0).dot(d) / len2, Scalar(0), Scalar(1));
  return (p - (s0 + t * d)).norm();
}

/// Largest distance from the waypoints of `a` to the polyline through `b`.
template <typename Scalar>
Scalar directed_hausdorff_to_polyline(const Trajectory<Scalar> & a, const Trajectory<Scalar> & b)
{
  if (b.size() == 1) {
    return directed_hausdorff(a, b);
  }
  Scalar worst(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    Scalar nearest = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j + 1 < b.size(); ++j) {
      nearest = std::min(nearest, point_segment_distance(a.point(i), b.point(j), b.point(j + 1)));
    }
    worst = std::max(worst, nearest);
  }
  return worst;
}

/// Symmetric Hausdorff distance between the waypoint sets. With
/// `to_segments`, each waypoint is measured against the other polyline's
/// segments instead of its waypoints.
template <typename Scalar>
Scalar hausdorff(const Trajectory<Scalar> & p, const Trajectory<Scalar> & q, bool to_segments = false)
{
  if (to_segments) {
    return std::max(directed_hausdorff_to_polyline(p, q), directed_hausdorff_to_polyline(q, p));
  }
  return std::max(directed_hausdorff(p, q), directed_hausdorff(q, p));
}

inline constexpr Eigen::Index kDefaultResampleCount = 50;

/// Root mean square pointwise error after resampling both sides to `k`
/// points by arc length.
template <typename Scalar>
Scalar rmse(
  const Trajectory<Scalar> & p, const Trajectory<Scalar> & q,
  Eigen::Index k = kDefaultResampleCount)
{
  const Trajectory<Scalar> a = resample(p, k);
  const Trajectory<Scalar> b = resample(q, k);
  return std::sqrt((a.points() - b.points()).rowwise().squaredNorm().mean());
}

/// DFD, HD and RMSE of one trajectory prediction plus their mean.
template <typename Scalar>
class TrajectoryScore
{
public:
  TrajectoryScore(Scalar dfd, Scalar hd, Scalar rmse)
  : dfd_(dfd), hd_(hd), rmse_(rmse), avg_((dfd + hd + rmse) / Scalar(3))
  {
    check();
  }

  /// Restores a stored score; the stored average must match its components.
  TrajectoryScore(Scalar dfd, Scalar hd, Scalar rmse, Scalar avg)
  : dfd_(dfd), hd_(hd), rmse_(rmse), avg_(avg)
  {
    check();
    if (std::abs(avg_ - (dfd_ + hd_ + rmse_) / Scalar(3)) > Scalar(1e-9)) {
      throw std::invalid_argument("stored Avg does not equal the mean of DFD, HD and RMSE");
    }
  }

  Scalar dfd() const { return dfd_; }
  Scalar hd() const { return hd_; }
  Scalar rmse() const { return rmse_; }
  Scalar avg() const { return avg_; }

private:
  void check() const
  {
    if (!(dfd_ >= Scalar(0) && hd_ >= Scalar(0) && rmse_ >= Scalar(0))) {
      throw std::invalid_argument("trajectory scores must be non-negative");
    }
  }

  Scalar dfd_;
  Scalar hd_;
  Scalar rmse_;
  Scalar avg_;
};

template <typename Scalar>
TrajectoryScore<Scalar> score_trajectory(
  const Trajectory<Scalar> & pred, const Trajectory<Scalar> & gt,
  Eigen::Index resample_k = kDefaultResampleCount, bool segment_hausdorff = false)
{
  return TrajectoryScore<Scalar>(
    discrete_frechet(pred, gt), hausdorff(pred, gt, segment_hausdorff), rmse(pred, gt, resample_k));
}

/// Column means of a report row; a column without records is empty.
template <typename Scalar>
struct AggregateRow
{
  std::optional<Scalar> iou;
  std::optional<Scalar> dfd;
  std::optional<Scalar> hd;
  std::optional<Scalar> rmse;
  std::optional<Scalar> avg;
};

/// Unweighted means of the trajectory columns and of the IoU column. Avg is
/// the mean of per-record averages, which equals the mean of the three
/// column means.
template <typename Scalar>
AggregateRow<Scalar> aggregate(
  std::span<const TrajectoryScore<Scalar>> scores, std::span<const Scalar> ious)
{
  if (scores.empty() && ious.empty()) {
    throw EmptyInput("aggregate needs at least one record");
  }
  AggregateRow<Scalar> row;
  if (!ious.empty()) {
    Scalar sum(0);
    for (const Scalar v : ious) {
      sum += v;
    }
    row.iou = sum / static_cast<Scalar>(ious.size());
  }
  if (!scores.empty()) {
    Scalar dfd(0), hd(0), rm(0), avg(0);
    for (const auto & s : scores) {
      dfd += s.dfd();
      hd += s.hd();
      rm += s.rmse();
      avg += s.avg();
    }
    const auto n = static_cast<Scalar>(scores.size());
    row.dfd = dfd / n;
    row.hd = hd / n;
    row.rmse = rm / n;
    row.avg = avg / n;
  }
  return row;
}

}  // namespace trajreward

#endif  // TRAJREWARD__METRICS_HPP_
