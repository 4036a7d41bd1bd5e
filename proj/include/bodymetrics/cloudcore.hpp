// Copyright 2026 The bodymetrics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BODYMETRICS_CLOUDCORE_HPP_
#define BODYMETRICS_CLOUDCORE_HPP_

// Geometric value types and depth-frame back-projection.
//
// Convention: camera-centred right-handed frame, +z along the optical axis,
// +x to the right and +y down in image space. All lengths are metres; raw
// depth units are converted exactly once, in depth_to_cloud.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bodymetrics/error.hpp"

namespace bodymetrics {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](std::size_t i) const {
    return i == 0 ? x : (i == 1 ? y : z);
  }
  bool is_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
  friend constexpr bool operator==(const Point3&, const Point3&) = default;
};

using Vec3 = Point3;

constexpr Point3 operator+(const Point3& a, const Point3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
constexpr Point3 operator-(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
constexpr Point3 operator-(const Point3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Point3 operator*(double s, const Point3& a) {
  return {s * a.x, s * a.y, s * a.z};
}
constexpr Point3 operator*(const Point3& a, double s) { return s * a; }
constexpr Point3 operator/(const Point3& a, double s) {
  return {a.x / s, a.y / s, a.z / s};
}
constexpr double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double squared_distance(const Point3& a, const Point3& b) {
  const Vec3 d = a - b;
  return dot(d, d);
}
inline double distance(const Point3& a, const Point3& b) {
  return std::sqrt(squared_distance(a, b));
}

/// Direction of length one. Construction normalises; a zero or non-finite
/// input throws.
class UnitVector {
 public:
  UnitVector() = default;
  explicit UnitVector(const Vec3& v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "cannot normalise a zero or non-finite vector");
    }
    v_ = v / n;
  }
  UnitVector(double x, double y, double z) : UnitVector(Vec3{x, y, z}) {}

  static UnitVector x_axis() { return UnitVector(1, 0, 0); }
  static UnitVector y_axis() { return UnitVector(0, 1, 0); }
  static UnitVector z_axis() { return UnitVector(0, 0, 1); }

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x; }
  double y() const { return v_.y; }
  double z() const { return v_.z; }
  double operator[](std::size_t i) const { return v_[i]; }
  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  Vec3 v_{0.0, 0.0, 1.0};
};

inline double dot(const Vec3& a, const UnitVector& u) { return dot(a, u.vec()); }

/// Ordered sequence of finite points. Immutable after construction.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> points,
                      std::optional<std::string> frame_id = std::nullopt)
      : points_(std::move(points)), frame_id_(std::move(frame_id)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!points_[i].is_finite()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "point " + std::to_string(i) + " has a non-finite coordinate");
      }
    }
  }

  std::span<const Point3> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }
  const std::optional<std::string>& frame_id() const { return frame_id_; }

  /// New cloud holding the points at `indices` (in the given order).
  PointCloud select(std::span<const std::size_t> indices) const {
    std::vector<Point3> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(points_.at(i));
    return PointCloud(std::move(out), frame_id_, Trusted{});
  }

  friend bool operator==(const PointCloud& a, const PointCloud& b) {
    return a.points_ == b.points_;
  }

 private:
  struct Trusted {};
  PointCloud(std::vector<Point3> points, std::optional<std::string> frame_id,
             Trusted)
      : points_(std::move(points)), frame_id_(std::move(frame_id)) {}

  std::vector<Point3> points_;
  std::optional<std::string> frame_id_;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  double depth_scale = 0.001;  // metres per raw unit

  /// 848x480 depth stream geometry with a 1 mm depth quantum.
  static CameraIntrinsics default_848x480() {
    return {457.1, 457.1, 424.0, 240.0, 848, 480, 0.001};
  }

  void validate() const {
    auto fail = [](const std::string& what) {
      throw Error(ErrorCode::kInvalidIntrinsics, what);
    };
    if (!(fx > 0.0) || !std::isfinite(fx)) fail("fx must be positive");
    if (!(fy > 0.0) || !std::isfinite(fy)) fail("fy must be positive");
    if (width <= 0 || height <= 0) fail("width and height must be positive");
    if (!(depth_scale > 0.0) || !std::isfinite(depth_scale))
      fail("depth_scale must be positive");
    if (!(cx >= 0.0 && cx < width)) fail("cx must lie in [0, width)");
    if (!(cy >= 0.0 && cy < height)) fail("cy must lie in [0, height)");
  }

  friend bool operator==(const CameraIntrinsics&,
                         const CameraIntrinsics&) = default;
};

/// Row-major raw depth grid. A sample of 0 is a hole.
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
  CameraIntrinsics intrinsics;

  std::uint16_t at(int u, int v) const {
    return data[static_cast<std::size_t>(v) * width + u];
  }

  void validate() const {
    intrinsics.validate();
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::kMalformedFrame, "frame dimensions must be positive");
    }
    if (data.size() != static_cast<std::size_t>(width) * height) {
      throw Error(ErrorCode::kMalformedFrame,
                  "depth data holds " + std::to_string(data.size()) +
                      " samples, expected " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    if (width != intrinsics.width || height != intrinsics.height) {
      throw Error(ErrorCode::kMalformedFrame,
                  "frame dimensions differ from intrinsics dimensions");
    }
  }

  friend bool operator==(const DepthFrame&, const DepthFrame&) = default;
};

struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;  // 0 = background

  friend bool operator==(const LabelMask&, const LabelMask&) = default;
};

struct AABB {
  Point3 min;
  Point3 max;

  Vec3 extent() const { return max - min; }
  double diagonal() const { return norm(extent()); }
  bool contains(const Point3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
  friend bool operator==(const AABB&, const AABB&) = default;
};

namespace detail {

template <typename Keep>
PointCloud back_project(const DepthFrame& frame, double z_min, double z_max,
                        Keep keep) {
  frame.validate();
  if (!(z_min >= 0.0) || !(z_min < z_max)) {
    throw Error(ErrorCode::kInvalidArgument, "depth band requires 0 <= z_min < z_max");
  }
  const CameraIntrinsics& k = frame.intrinsics;
  std::vector<Point3> out;
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * frame.width + u;
      const std::uint16_t d = frame.data[idx];
      if (d == 0 || !keep(idx)) continue;
      const double z = d * k.depth_scale;
      if (z < z_min || z > z_max) continue;
      out.push_back({(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z});
    }
  }
  return PointCloud(std::move(out));
}

}  // namespace detail

/// Lifts every in-band, non-hole pixel through the pinhole model, in row-major
/// scan order.
inline PointCloud depth_to_cloud(const DepthFrame& frame, double z_min,
                                 double z_max) {
  return detail::back_project(frame, z_min, z_max,
                              [](std::size_t) { return true; });
}

/// As depth_to_cloud, restricted to pixels whose mask value equals `label`.
inline PointCloud cloud_from_masked_depth(const DepthFrame& frame,
                                          const LabelMask& mask, int label,
                                          double z_min, double z_max) {
  if (mask.width != frame.width || mask.height != frame.height ||
      mask.labels.size() != static_cast<std::size_t>(mask.width) * mask.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "label mask is " + std::to_string(mask.width) + "x" +
                    std::to_string(mask.height) + ", frame is " +
                    std::to_string(frame.width) + "x" +
                    std::to_string(frame.height));
  }
  return detail::back_project(frame, z_min, z_max, [&](std::size_t idx) {
    return static_cast<int>(mask.labels[idx]) == label;
  });
}

inline AABB bounding_box(std::span<const Point3> points) {
  if (points.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "bounding box of an empty cloud");
  }
  AABB box{points[0], points[0]};
  for (const Point3& p : points.subspan(1)) {
    box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y),
               std::min(box.min.z, p.z)};
    box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y),
               std::max(box.max.z, p.z)};
  }
  return box;
}

inline AABB bounding_box(const PointCloud& cloud) {
  return bounding_box(cloud.points());
}

namespace detail {

// Flip so the largest-magnitude component is positive (first index wins ties).
inline Vec3 canonical_sign(Vec3 v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (std::abs(v[i]) > std::abs(v[best]) + 1e-12) best = i;
  }
  return v[best] < 0.0 ? -v : v;
}

}  // namespace detail

/// Dominant direction of the cloud: the covariance eigenvector with the
/// largest eigenvalue, falling back to the longest bounding-box extent when
/// the top two eigenvalues are within 1e-9 relative of each other.
inline UnitVector principal_axis(std::span<const Point3> points) {
  if (points.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "principal axis of an empty cloud");
  }
  const AABB box = bounding_box(points);
  if (box.min == box.max) {
    throw Error(ErrorCode::kDegenerateCloud,
                "all points coincide; no principal axis");
  }

  Vec3 mean{};
  for (const Point3& p : points) mean = mean + p;
  mean = mean / static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Point3& p : points) {
    const Eigen::Vector3d d(p.x - mean.x, p.y - mean.y, p.z - mean.z);
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Eigen::Vector3d values = solver.eigenvalues();  // ascending
  const double top = values(2);
  if (top > 0.0 && (top - values(1)) / top >= 1e-9) {
    const Eigen::Vector3d v = solver.eigenvectors().col(2);
    return UnitVector(detail::canonical_sign({v(0), v(1), v(2)}));
  }

  const Vec3 ext = box.extent();
  std::size_t axis = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (ext[i] > ext[axis]) axis = i;
  }
  Vec3 u{};
  if (axis == 0) u.x = 1.0;
  if (axis == 1) u.y = 1.0;
  if (axis == 2) u.z = 1.0;
  return UnitVector(u);
}

inline UnitVector principal_axis(const PointCloud& cloud) {
  return principal_axis(cloud.points());
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_CLOUDCORE_HPP_
