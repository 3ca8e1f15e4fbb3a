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

#ifndef TRAJREWARD__GEOMETRY_HPP_
#define TRAJREWARD__GEOMETRY_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace trajreward
{

/// Waypoints live in the image-normalized frame [0, kFrameExtent).
inline constexpr double kFrameExtent = 1000.0;

/// Floor applied to local segment lengths so log-ratios stay finite.
inline constexpr double kLengthFloor = 1e-6;

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

/// One waypoint per row: column 0 is x, column 1 is y.
template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 2, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Largest representable coordinate strictly below the frame extent.
template <typename Scalar>
Scalar frame_upper_bound()
{
  return std::nextafter(static_cast<Scalar>(kFrameExtent), Scalar(0));
}

/// Clamps a coordinate into [0, 1000). Returns true if the value changed.
template <typename Scalar>
bool clamp_coordinate(Scalar & value)
{
  // +0 folds a negative zero into +0.
  const Scalar clamped = std::clamp(value, Scalar(0), frame_upper_bound<Scalar>()) + Scalar(0);
  const bool changed = clamped != value || std::signbit(value);
  value = clamped;
  return changed;
}

/// Ordered, non-empty waypoint sequence. Order is never changed by any operation.
template <typename Scalar>
class Trajectory
{
public:
  using Points = PointMatrix<Scalar>;

  explicit Trajectory(Points points, bool clamped = false)
  : points_(std::move(points)), clamped_(clamped)
  {
    if (points_.rows() == 0) {
      throw std::invalid_argument("trajectory needs at least one waypoint");
    }
    if (!points_.allFinite()) {
      throw std::invalid_argument("trajectory coordinates must be finite");
    }
  }

  Trajectory(std::initializer_list<std::pair<Scalar, Scalar>> xy)
  : Trajectory(from_pairs(xy))
  {
  }

  /// Builds a trajectory whose coordinates are clamped into the frame; the
  /// result remembers whether anything had to be clamped.
  static Trajectory clamped_to_frame(Points points)
  {
    bool changed = false;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      changed |= clamp_coordinate(points(i, 0));
      changed |= clamp_coordinate(points(i, 1));
    }
    return Trajectory(std::move(points), changed);
  }

  Eigen::Index size() const { return points_.rows(); }
  const Points & points() const { return points_; }
  Point2<Scalar> point(Eigen::Index i) const { return points_.row(i).transpose(); }
  Point2<Scalar> front() const { return point(0); }
  Point2<Scalar> back() const { return point(size() - 1); }

  /// True when construction clamped at least one out-of-frame coordinate.
  bool clamped() const { return clamped_; }

  bool operator==(const Trajectory & other) const
  {
    return points_.rows() == other.points_.rows() && points_ == other.points_;
  }

private:
  static Points from_pairs(std::initializer_list<std::pair<Scalar, Scalar>> xy)
  {
    Points points(static_cast<Eigen::Index>(xy.size()), 2);
    Eigen::Index i = 0;
    for (const auto & [x, y] : xy) {
      points(i, 0) = x;
      points(i, 1) = y;
      ++i;
    }
    return points;
  }

  Points points_;
  bool clamped_ = false;
};

/// Per-waypoint unit tangent and local segment length.
template <typename Scalar>
struct TrajectoryFeatures
{
  PointMatrix<Scalar> tangents;
  VectorX<Scalar> seg_lengths;
};

/// Removes consecutive duplicate waypoints.
template <typename Scalar>
Trajectory<Scalar> dedup(const Trajectory<Scalar> & traj)
{
  const auto & pts = traj.points();
  PointMatrix<Scalar> out(pts.rows(), 2);
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (kept > 0 && pts.row(i) == out.row(kept - 1)) {
      continue;
    }
    out.row(kept++) = pts.row(i);
  }
  out.conservativeResize(kept, 2);
  return Trajectory<Scalar>(std::move(out), traj.clamped());
}

template <typename Scalar>
bool has_consecutive_duplicates(const Trajectory<Scalar> & traj)
{
  const auto & pts = traj.points();
  for (Eigen::Index i = 1; i < pts.rows(); ++i) {
    if (pts.row(i) == pts.row(i - 1)) {
      return true;
    }
  }
  return false;
}

template <typename Scalar>
Scalar arc_length(const Trajectory<Scalar> & traj)
{
  Scalar total(0);
  for (Eigen::Index i = 1; i < traj.size(); ++i) {
    total += (traj.point(i) - traj.point(i - 1)).norm();
  }
  return total;
}

/// Tangent and segment-length features of a deduplicated trajectory.
///
/// Endpoint tangents use the forward (first) and backward (last) difference;
/// interior tangents normalize the sum of the two adjacent unit directions.
/// When those directions cancel (a 180 degree turn) the outgoing direction is
/// used. Segment length is the distance to the next waypoint, or to the
/// previous one for the last waypoint, floored at `length_floor`.
/// A single waypoint gets tangent (1, 0) and length `length_floor`.
template <typename Scalar>
TrajectoryFeatures<Scalar> compute_features(
  const Trajectory<Scalar> & traj, Scalar length_floor = Scalar(kLengthFloor))
{
  if (has_consecutive_duplicates(traj)) {
    throw std::invalid_argument("compute_features expects a deduplicated trajectory");
  }
  const Eigen::Index n = traj.size();
  TrajectoryFeatures<Scalar> f;
  f.tangents.resize(n, 2);
  f.seg_lengths.resize(n);

  if (n == 1) {
    f.tangents.row(0) << Scalar(1), Scalar(0);
    f.seg_lengths(0) = length_floor;
    return f;
  }

  // Unit direction and length of each of the n-1 segments.
  PointMatrix<Scalar> dirs(n - 1, 2);
  VectorX<Scalar> lens(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Point2<Scalar> d = traj.point(i + 1) - traj.point(i);
    lens(i) = d.norm();
    dirs.row(i) = (d / lens(i)).transpose();
  }

  f.tangents.row(0) = dirs.row(0);
  f.tangents.row(n - 1) = dirs.row(n - 2);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const Point2<Scalar> blend = (dirs.row(i - 1) + dirs.row(i)).transpose();
    const Scalar norm = blend.norm();
    if (norm < Scalar(1e-12)) {
      f.tangents.row(i) = dirs.row(i);
    } else {
      f.tangents.row(i) = (blend / norm).transpose();
    }
  }

  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    f.seg_lengths(i) = std::max(lens(i), length_floor);
  }
  f.seg_lengths(n - 1) = std::max(lens(n - 2), length_floor);
  return f;
}

/// Cumulative arc length at every waypoint; entry 0 is zero.
template <typename Scalar>
VectorX<Scalar> cumulative_arc_length(const Trajectory<Scalar> & traj)
{
  VectorX<Scalar> cum(traj.size());
  cum(0) = Scalar(0);
  for (Eigen::Index i = 1; i < traj.size(); ++i) {
    cum(i) = cum(i - 1) + (traj.point(i) - traj.point(i - 1)).norm();
  }
  return cum;
}

/// Point at arc-length parameter `s` along the polyline, given its cumulative
/// arc lengths. `s` is clamped to [0, total length].
template <typename Scalar>
Point2<Scalar> point_at_arc_length(
  const Trajectory<Scalar> & traj, const VectorX<Scalar> & cum, Scalar s)
{
  const Eigen::Index n = traj.size();
  if (s <= Scalar(0) || n == 1) {
    return traj.front();
  }
  if (s >= cum(n - 1)) {
    return traj.back();
  }
  // First vertex whose cumulative length is >= s.
  const auto * begin = cum.data();
  const auto it = std::lower_bound(begin, begin + n, s);
  const Eigen::Index hi = static_cast<Eigen::Index>(it - begin);
  const Eigen::Index lo = hi - 1;
  const Scalar span = cum(hi) - cum(lo);
  if (span <= Scalar(0)) {
    return traj.point(hi);
  }
  const Scalar t = (s - cum(lo)) / span;
  return traj.point(lo) + t * (traj.point(hi) - traj.point(lo));
}

/// `k` points spaced uniformly by arc length along the original polyline.
/// The first and last points are the original endpoints.
template <typename Scalar>
Trajectory<Scalar> resample(const Trajectory<Scalar> & traj, Eigen::Index k)
{
  if (k < 2) {
    throw std::invalid_argument("resample needs k >= 2");
  }
  const VectorX<Scalar> cum = cumulative_arc_length(traj);
  const Scalar total = cum(traj.size() - 1);
  PointMatrix<Scalar> out(k, 2);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Scalar s = total * static_cast<Scalar>(j) / static_cast<Scalar>(k - 1);
    out.row(j) = point_at_arc_length(traj, cum, s).transpose();
  }
  out.row(0) = traj.points().row(0);
  out.row(k - 1) = traj.points().row(traj.size() - 1);
  return Trajectory<Scalar>(std::move(out), traj.clamped());
}

template <typename Scalar>
Trajectory<Scalar> reversed(const Trajectory<Scalar> & traj)
{
  return Trajectory<Scalar>(traj.points().colwise().reverse().eval(), traj.clamped());
}

template <typename Scalar>
Trajectory<Scalar> translated(const Trajectory<Scalar> & traj, const Point2<Scalar> & delta)
{
  PointMatrix<Scalar> pts = traj.points();
  pts.rowwise() += delta.transpose();
  return Trajectory<Scalar>(std::move(pts), traj.clamped());
}

}  // namespace trajreward

#endif  // TRAJREWARD__GEOMETRY_HPP_
