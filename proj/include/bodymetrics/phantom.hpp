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


#ifndef BODYMETRICS_PHANTOM_HPP_
#define BODYMETRICS_PHANTOM_HPP_

// Synthetic ground truth: analytic solids, surface sampling, a composable
// humanoid and a z-buffer splat renderer for depth frames.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/error.hpp"

namespace bodymetrics {

enum class ShapeKind { kEllipsoid, kCapsule, kBox };

inline std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kEllipsoid: return "ellipsoid";
    case ShapeKind::kCapsule: return "capsule";
    case ShapeKind::kBox: return "box";
  }
  return "unknown";
}

namespace detail {

inline Eigen::Vector3d to_eigen(const Point3& p) { return {p.x, p.y, p.z}; }
inline Point3 to_point(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

/// Surface area of an ellipsoid with semi-axes a, b, c (Legendre form).
inline double ellipsoid_area(double a, double b, double c) {
  std::array<double, 3> s{a, b, c};
  std::sort(s.begin(), s.end(), std::greater<>());
  const double A = s[0], B = s[1], C = s[2];
  constexpr double pi = std::numbers::pi;
  if (A == C) return 4.0 * pi * A * A;
  const double phi = std::acos(C / A);
  const double k = std::sqrt(std::clamp(A * A * (B * B - C * C) / (B * B * (A * A - C * C)),
                                        0.0, 1.0));
  const double sin_phi = std::sin(phi);
  const double cos_phi = std::cos(phi);
  const double F = std::ellint_1(k, phi);
  const double E = std::ellint_2(k, phi);
  return 2.0 * pi * C * C +
         2.0 * pi * A * B / sin_phi * (E * sin_phi * sin_phi + F * cos_phi * cos_phi);
}

/// Distance from y to the surface of the axis-aligned ellipsoid with semi-axes
/// e, for y outside it. Bisects the Lagrange multiplier of the closest point.
inline double ellipsoid_distance(const std::array<double, 3>& e, const Point3& y) {
  const std::array<double, 3> q{std::abs(y.x), std::abs(y.y), std::abs(y.z)};
  auto excess = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double r = e[i] * q[i] / (t + e[i] * e[i]);
      s += r * r;
    }
    return s - 1.0;
  };
  double lo = 0.0;
  double hi = std::max({e[0], e[1], e[2]}) * std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  double d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double x = e[i] * e[i] * q[i] / (t + e[i] * e[i]);
    d2 += (x - q[i]) * (x - q[i]);
  }
  return std::sqrt(d2);
}

inline Point3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    const Point3 v{gauss(rng), gauss(rng), gauss(rng)};
    const double n = norm(v);
    if (n > 1e-12) return v / n;
  }
}

}  // namespace detail

/// Analytic solid in a rigid pose. Parameters, in metres:
///   ellipsoid: semi-axes (a, b, c)
///   capsule:   radius r, cylinder length h along local y (third entry unused)
///   box:       full extents (x, y, z)
struct Solid {
  ShapeKind kind = ShapeKind::kEllipsoid;
  std::array<double, 3> params{1.0, 1.0, 1.0};
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Point3 translation;
  std::string label;

  static Solid ellipsoid(double a, double b, double c, Point3 center = {},
                         std::string label = "ellipsoid") {
    return {ShapeKind::kEllipsoid, {a, b, c}, Eigen::Matrix3d::Identity(), center,
            std::move(label)};
  }
  static Solid capsule(double r, double h, Point3 center = {}, std::string label = "capsule") {
    return {ShapeKind::kCapsule, {r, h, 0.0}, Eigen::Matrix3d::Identity(), center,
            std::move(label)};
  }
  static Solid box(double ex, double ey, double ez, Point3 center = {},
                   std::string label = "box") {
    return {ShapeKind::kBox, {ex, ey, ez}, Eigen::Matrix3d::Identity(), center,
            std::move(label)};
  }

  void validate() const {
    const int n = kind == ShapeKind::kCapsule ? 2 : 3;
    for (int i = 0; i < n; ++i) {
      if (!(params[i] > 0.0) || !std::isfinite(params[i])) {
        throw Error(ErrorCode::kParameterOutOfRange,
                    "solid '" + label + "' size parameters must be positive");
      }
    }
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if (!gram.isApprox(Eigen::Matrix3d::Identity(), 1e-9) || rotation.determinant() < 0.0 ||
        !translation.is_finite()) {
      throw Error(ErrorCode::kParameterOutOfRange,
                  "solid '" + label + "' pose must be a finite rigid motion");
    }
  }

  double analytic_volume() const {
    constexpr double pi = std::numbers::pi;
    const auto& p = params;
    switch (kind) {
      case ShapeKind::kEllipsoid: return 4.0 * pi * p[0] * p[1] * p[2] / 3.0;
      case ShapeKind::kCapsule: return pi * p[0] * p[0] * p[1] + 4.0 * pi * p[0] * p[0] * p[0] / 3.0;
      case ShapeKind::kBox: return p[0] * p[1] * p[2];
    }
    return 0.0;
  }

  double surface_area() const {
    constexpr double pi = std::numbers::pi;
    const auto& p = params;
    switch (kind) {
      case ShapeKind::kEllipsoid: return detail::ellipsoid_area(p[0], p[1], p[2]);
      case ShapeKind::kCapsule: return 2.0 * pi * p[0] * p[1] + 4.0 * pi * p[0] * p[0];
      case ShapeKind::kBox: return 2.0 * (p[0] * p[1] + p[1] * p[2] + p[0] * p[2]);
    }
    return 0.0;
  }

  Point3 to_world(const Point3& local) const {
    return detail::to_point(rotation * detail::to_eigen(local)) + translation;
  }
  Point3 to_local(const Point3& world) const {
    return detail::to_point(rotation.transpose() * detail::to_eigen(world - translation));
  }

  bool contains(const Point3& world) const {
    const Point3 q = to_local(world);
    const auto& p = params;
    switch (kind) {
      case ShapeKind::kEllipsoid: {
        const double s = q.x / p[0] * (q.x / p[0]) + q.y / p[1] * (q.y / p[1]) +
                         q.z / p[2] * (q.z / p[2]);
        return s <= 1.0;
      }
      case ShapeKind::kCapsule: {
        const double y = std::clamp(q.y, -0.5 * p[1], 0.5 * p[1]);
        return q.x * q.x + (q.y - y) * (q.y - y) + q.z * q.z <= p[0] * p[0];
      }
      case ShapeKind::kBox:
        return std::abs(q.x) <= 0.5 * p[0] && std::abs(q.y) <= 0.5 * p[1] &&
               std::abs(q.z) <= 0.5 * p[2];
    }
    return false;
  }

  /// Half-width of the solid's projection onto u, about dot(translation, u).
  double support_half_width(const UnitVector& u) const {
    const Eigen::Vector3d w = rotation.transpose() * detail::to_eigen(u.vec());
    const auto& p = params;
    switch (kind) {
      case ShapeKind::kEllipsoid:
        return std::sqrt(p[0] * p[0] * w.x() * w.x() + p[1] * p[1] * w.y() * w.y() +
                         p[2] * p[2] * w.z() * w.z());
      case ShapeKind::kCapsule: return p[0] + 0.5 * p[1] * std::abs(w.y());
      case ShapeKind::kBox:
        return 0.5 * (p[0] * std::abs(w.x()) + p[1] * std::abs(w.y()) + p[2] * std::abs(w.z()));
    }
    return 0.0;
  }

  /// Calls emit(world_point) `count` times with area-uniform surface samples.
  template <typename Emit>
  void sample(std::size_t count, std::mt19937_64& rng, Emit&& emit) const {
    constexpr double pi = std::numbers::pi;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& p = params;
    for (std::size_t n = 0; n < count; ++n) {
      Point3 q;
      switch (kind) {
        case ShapeKind::kEllipsoid: {
          // Sphere directions mapped onto the ellipsoid, thinned by the local
          // area stretch so the accepted points are area-uniform.
          const double bc = p[1] * p[2], ac = p[0] * p[2], ab = p[0] * p[1];
          const double wmax = std::max({bc, ac, ab});
          for (;;) {
            const Point3 u = detail::random_unit(rng);
            const double w = std::sqrt(bc * bc * u.x * u.x + ac * ac * u.y * u.y +
                                       ab * ab * u.z * u.z) / wmax;
            if (unit(rng) < w) {
              q = {p[0] * u.x, p[1] * u.y, p[2] * u.z};
              break;
            }
          }
          break;
        }
        case ShapeKind::kCapsule: {
          const double r = p[0], h = p[1];
          const double side = 2.0 * pi * r * h;
          if (unit(rng) * (side + 4.0 * pi * r * r) < side) {
            const double theta = 2.0 * pi * unit(rng);
            q = {r * std::cos(theta), h * (unit(rng) - 0.5), r * std::sin(theta)};
          } else {
            const Point3 u = detail::random_unit(rng);
            q = r * u;
            q.y += u.y >= 0.0 ? 0.5 * h : -0.5 * h;
          }
          break;
        }
        case ShapeKind::kBox: {
          const double areas[3] = {p[1] * p[2], p[0] * p[2], p[0] * p[1]};
          double pick = unit(rng) * (areas[0] + areas[1] + areas[2]);
          int axis = 0;
          while (axis < 2 && pick >= areas[axis]) pick -= areas[axis++];
          const double s = unit(rng) < 0.5 ? -0.5 : 0.5;
          std::array<double, 3> c{p[0] * (unit(rng) - 0.5), p[1] * (unit(rng) - 0.5),
                                  p[2] * (unit(rng) - 0.5)};
          c[axis] = s * p[axis];
          q = {c[0], c[1], c[2]};
          break;
        }
      }
      emit(to_world(q));
    }
  }
};

/// Axis-aligned rectangle in the plane z = center.z, standing in for a bed.
struct BedPatch {
  Point3 center;
  double half_x = 0.5;
  double half_y = 1.0;

  double area() const { return 4.0 * half_x * half_y; }

  template <typename Emit>
  void sample(std::size_t count, std::mt19937_64& rng, Emit&& emit) const {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t n = 0; n < count; ++n) {
      const double x = center.x + half_x * unit(rng);
      const double y = center.y + half_y * unit(rng);
      emit(Point3{x, y, center.z});
    }
  }
};

struct GroundTruth {
  double volume = 0.0;  // m^3
  double height = 0.0;  // m, extent along the body axis
};

/// Solids are assumed interior-disjoint, so the true volume is the sum of the
/// analytic volumes.
struct PhantomScene {
  std::vector<Solid> solids;
  UnitVector body_axis = UnitVector::y_axis();
  std::optional<BedPatch> bed;
  GroundTruth ground_truth;
};

inline double scene_volume(const PhantomScene& scene) {
  double v = 0.0;
  for (const Solid& s : scene.solids) v += s.analytic_volume();
  return v;
}

/// [lo, hi] of the scene's projection onto axis.
inline std::pair<double, double> scene_span(const PhantomScene& scene, const UnitVector& axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Solid& s : scene.solids) {
    const double c = dot(s.translation, axis);
    const double w = s.support_half_width(axis);
    lo = std::min(lo, c - w);
    hi = std::max(hi, c + w);
  }
  return {lo, hi};
}

inline double scene_extent(const PhantomScene& scene, const UnitVector& axis) {
  if (scene.solids.empty()) return 0.0;
  const auto [lo, hi] = scene_span(scene, axis);
  return hi - lo;
}

/// Scene from solids, with ground truth computed analytically.
inline PhantomScene make_scene(std::vector<Solid> solids,
                               UnitVector body_axis = UnitVector::y_axis()) {
  for (const Solid& s : solids) s.validate();
  PhantomScene scene{std::move(solids), body_axis, std::nullopt, {}};
  scene.ground_truth = {scene_volume(scene), scene_extent(scene, body_axis)};
  return scene;
}

enum class HumanoidPose { kArmsDown, kArmsOut };

/// Frozen humanoid proportions, as fractions of standing height. Widths and
/// depths (x and z sizes, limb radii) are further multiplied by `build`.
namespace humanoid_table {
inline constexpr double kHeadSemiX = 0.05;
inline constexpr double kHeadSemiY = 1.0 / 15.0;  // head is 1/7.5 of height
inline constexpr double kHeadSemiZ = 0.055;
inline constexpr double kNeckGap = 0.01;
inline constexpr double kTorsoSemiX = 0.165;
inline constexpr double kTorsoSemiY = 0.236;
inline constexpr double kTorsoSemiZ = 0.059;
inline constexpr double kHipGap = 0.01;
inline constexpr double kLegRadius = 0.027;
inline constexpr double kLegGap = 0.002;
inline constexpr double kArmRadius = 0.028;
inline constexpr double kArmLength = 0.32;
inline constexpr double kArmDrop = 0.03;        // arms-down shoulder below torso top
inline constexpr double kArmSideGap = 0.005;    // arms-down gap to the torso
inline constexpr double kArmClearance = 0.002;  // arms-out surface clearance
}  // namespace humanoid_table

namespace detail {

/// Smallest inner offset x0 at which a horizontal capsule (radius r, length L,
/// axis at height y) clears the axis-aligned ellipsoid by `clearance`.
inline double arm_inner_offset(const std::array<double, 3>& torso, double torso_cy, double y,
                               double r, double length, double clearance) {
  constexpr int kSamples = 1024;
  auto clear = [&](double x0) {
    for (int i = 0; i <= kSamples; ++i) {
      const double x = x0 + r + (length - 2.0 * r) * i / kSamples;
      const Point3 q{x, y - torso_cy, 0.0};
      const double s = q.x * q.x / (torso[0] * torso[0]) + q.y * q.y / (torso[1] * torso[1]);
      if (s <= 1.0 || ellipsoid_distance(torso, q) < r + clearance) return false;
    }
    return true;
  };
  double lo = 0.0;
  double hi = torso[0] + clearance;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (clear(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace detail

/// Head, torso, two legs and two arms standing on y = 0 with the head top at
/// y = height. The body axis is +y and the body faces +z.
inline PhantomScene make_humanoid(double height, double build = 1.0,
                                  HumanoidPose pose = HumanoidPose::kArmsDown) {
  namespace t = humanoid_table;
  if (!(height >= 0.5 && height <= 2.5)) {
    throw Error(ErrorCode::kParameterOutOfRange, "height must lie in [0.5, 2.5] m");
  }
  if (!(build > 0.0) || !std::isfinite(build)) {
    throw Error(ErrorCode::kParameterOutOfRange, "build must be positive");
  }
  const double H = height;
  const double head_b = t::kHeadSemiY * H;
  const double torso_top = H - 2.0 * head_b - t::kNeckGap * H;
  const double torso_b = t::kTorsoSemiY * H;
  const double torso_cy = torso_top - torso_b;
  const double leg_top = torso_top - 2.0 * torso_b - t::kHipGap * H;
  const double leg_r = t::kLegRadius * H * build;
  const double leg_h = leg_top - 2.0 * leg_r;
  const double arm_r = t::kArmRadius * H * build;
  const double arm_len = t::kArmLength * H;
  const double arm_h = arm_len - 2.0 * arm_r;
  if (!(leg_h > 0.0) || !(arm_h > 0.0)) {
    throw Error(ErrorCode::kParameterOutOfRange, "build too large for the limb lengths");
  }
  const std::array<double, 3> torso{t::kTorsoSemiX * H * build, torso_b,
                                    t::kTorsoSemiZ * H * build};

  std::vector<Solid> solids;
  solids.push_back(Solid::ellipsoid(t::kHeadSemiX * H * build, head_b,
                                    t::kHeadSemiZ * H * build, {0.0, H - head_b, 0.0}, "head"));
  solids.push_back(Solid::ellipsoid(torso[0], torso[1], torso[2], {0.0, torso_cy, 0.0}, "torso"));
  const double leg_x = leg_r + 0.5 * t::kLegGap * H;
  solids.push_back(Solid::capsule(leg_r, leg_h, {-leg_x, 0.5 * leg_top, 0.0}, "left_leg"));
  solids.push_back(Solid::capsule(leg_r, leg_h, {leg_x, 0.5 * leg_top, 0.0}, "right_leg"));

  if (pose == HumanoidPose::kArmsOut) {
    // Arm tops flush with the torso top, arms as close to the torso as the
    // clearance allows.
    const double y = torso_top - arm_r;
    const double x0 = detail::arm_inner_offset(torso, torso_cy, y, arm_r, arm_len,
                                               t::kArmClearance * H);
    Eigen::Matrix3d to_x;  // local +y onto world +x
    to_x << 0, 1, 0, -1, 0, 0, 0, 0, 1;
    for (double side : {-1.0, 1.0}) {
      Solid arm = Solid::capsule(arm_r, arm_h, {side * (x0 + 0.5 * arm_len), y, 0.0},
                                 side < 0 ? "left_arm" : "right_arm");
      arm.rotation = to_x;
      solids.push_back(arm);
    }
  } else {
    const double top = torso_top - t::kArmDrop * H;
    const double x = torso[0] + t::kArmSideGap * H + arm_r;
    solids.push_back(Solid::capsule(arm_r, arm_h, {-x, top - 0.5 * arm_len, 0.0}, "left_arm"));
    solids.push_back(Solid::capsule(arm_r, arm_h, {x, top - 0.5 * arm_len, 0.0}, "right_arm"));
  }

  PhantomScene scene = make_scene(std::move(solids));
  scene.ground_truth.height = H;  // exact by construction
  return scene;
}

/// Bed patch just behind the deepest point of the scene (smallest z), sized
/// to the scene footprint plus a margin.
inline BedPatch bed_under(const PhantomScene& scene, double gap = 0.0, double margin = 0.2) {
  const auto [x0, x1] = scene_span(scene, UnitVector::x_axis());
  const auto [y0, y1] = scene_span(scene, UnitVector::y_axis());
  const double z0 = scene_span(scene, UnitVector::z_axis()).first;
  return {{0.5 * (x0 + x1), 0.5 * (y0 + y1), z0 - gap},
          0.5 * (x1 - x0) + margin,
          0.5 * (y1 - y0) + margin};
}

/// Label of bed samples in SampledCloud::labels.
inline constexpr int kBedLabel = -1;

struct SampledCloud {
  PointCloud cloud;
  std::vector<int> labels;  // solid index per point, kBedLabel for the bed

  PointCloud with_label(int label) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) idx.push_back(i);
    }
    return cloud.select(idx);
  }
};

inline std::size_t sample_count(double area, double density) {
  return static_cast<std::size_t>(std::llround(area * density));
}

/// Area-proportional surface sample of every solid (then the bed), each point
/// perturbed by isotropic Gaussian noise of standard deviation noise_sigma.
inline SampledCloud sample_surface(const PhantomScene& scene, double points_per_m2,
                                   double noise_sigma, std::uint64_t seed) {
  if (!(points_per_m2 > 0.0) || !std::isfinite(points_per_m2)) {
    throw Error(ErrorCode::kInvalidArgument, "sampling density must be positive");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be non-negative");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Point3> points;
  std::vector<int> labels;
  auto emitter = [&](int label) {
    return [&, label](const Point3& p) {
      Point3 q = p;
      if (noise_sigma > 0.0) {
        q.x += noise_sigma * gauss(rng);
        q.y += noise_sigma * gauss(rng);
        q.z += noise_sigma * gauss(rng);
      }
      points.push_back(q);
      labels.push_back(label);
    };
  };
  for (std::size_t i = 0; i < scene.solids.size(); ++i) {
    const Solid& s = scene.solids[i];
    s.sample(sample_count(s.surface_area(), points_per_m2), rng, emitter(static_cast<int>(i)));
  }
  if (scene.bed) {
    scene.bed->sample(sample_count(scene.bed->area(), points_per_m2), rng, emitter(kBedLabel));
  }
  return {PointCloud(std::move(points)), std::move(labels)};
}

/// World-to-camera rigid motion: p_cam = rotation * p_world + translation.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Point3 translation;

  Point3 apply(const Point3& p) const {
    return detail::to_point(rotation * detail::to_eigen(p)) + translation;
  }

  /// Camera `distance` in front of the origin (+z), looking back along -z,
  /// with image rows running down the body (-y) and the optical axis at
  /// height `axis_height`.
  static CameraPose facing(double axis_height, double distance) {
    CameraPose pose;
    pose.rotation = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
    pose.translation = {0.0, axis_height, distance};
    return pose;
  }
};

/// The cloud expressed in the camera frame of `pose`.
inline PointCloud to_camera(const PointCloud& cloud, const CameraPose& pose) {
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const Point3& p : cloud) out.push_back(pose.apply(p));
  return PointCloud(std::move(out), cloud.frame_id());
}

/// Camera pose used for a scene: facing it from `distance`, optical axis at
/// the middle of its vertical span.
inline CameraPose default_camera(const PhantomScene& scene, double distance) {
  const auto [lo, hi] = scene_span(scene, UnitVector::y_axis());
  return CameraPose::facing(0.5 * (lo + hi), distance);
}

/// Sample density giving at least `per_pixel` points per pixel footprint on
/// surfaces no nearer than `depth`.
inline double splat_density(const CameraIntrinsics& intr, double depth, double per_pixel = 4.0) {
  return per_pixel * intr.fx * intr.fy / (depth * depth);
}

/// Z-buffer point splat: every surface sample lands on its nearest pixel and
/// the nearest depth wins. Unhit pixels stay 0. Per-pixel Gaussian noise is
/// added before quantising to raw units.
inline DepthFrame render_depth(const PhantomScene& scene, const CameraIntrinsics& intr,
                               const CameraPose& pose, std::uint64_t seed,
                               double depth_noise_sigma = 0.003) {
  intr.validate();
  if (!(depth_noise_sigma >= 0.0) || !std::isfinite(depth_noise_sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "depth_noise_sigma must be non-negative");
  }
  constexpr double kMinDepth = 0.1;
  const std::size_t w = static_cast<std::size_t>(intr.width);
  const std::size_t h = static_cast<std::size_t>(intr.height);
  std::vector<double> zbuf(w * h, std::numeric_limits<double>::infinity());
  auto splat = [&](const Point3& world) {
    const Point3 c = pose.apply(world);
    if (!(c.z > 0.0)) return;
    const double u = std::round(intr.fx * c.x / c.z + intr.cx);
    const double v = std::round(intr.fy * c.y / c.z + intr.cy);
    if (u < 0.0 || v < 0.0 || u >= static_cast<double>(w) || v >= static_cast<double>(h)) return;
    double& z = zbuf[static_cast<std::size_t>(v) * w + static_cast<std::size_t>(u)];
    z = std::min(z, c.z);
  };

  std::mt19937_64 rng(seed);
  for (const Solid& s : scene.solids) {
    const double r = s.support_half_width(UnitVector::x_axis()) +
                     s.support_half_width(UnitVector::y_axis()) +
                     s.support_half_width(UnitVector::z_axis());
    const double near = std::max(pose.apply(s.translation).z - r, kMinDepth);
    s.sample(sample_count(s.surface_area(), splat_density(intr, near)), rng, splat);
  }
  if (scene.bed) {
    const BedPatch& bed = *scene.bed;
    // Depth is affine over the flat patch, so a corner is nearest.
    double near = std::numeric_limits<double>::infinity();
    for (double sx : {-1.0, 1.0}) {
      for (double sy : {-1.0, 1.0}) {
        const Point3 corner{bed.center.x + sx * bed.half_x, bed.center.y + sy * bed.half_y,
                            bed.center.z};
        near = std::min(near, pose.apply(corner).z);
      }
    }
    near = std::max(near, kMinDepth);
    bed.sample(sample_count(bed.area(), splat_density(intr, near)), rng, splat);
  }

  DepthFrame frame;
  frame.width = intr.width;
  frame.height = intr.height;
  frame.intrinsics = intr;
  frame.data.assign(w * h, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < zbuf.size(); ++i) {
    if (!std::isfinite(zbuf[i])) continue;
    double z = zbuf[i];
    if (depth_noise_sigma > 0.0) z += depth_noise_sigma * gauss(rng);
    const double raw = std::round(z / intr.depth_scale);
    frame.data[i] = static_cast<std::uint16_t>(std::clamp(raw, 1.0, 65535.0));
  }
  return frame;
}

// JSON description, sufficient to regenerate any sample or frame exactly.

inline nlohmann::json solid_to_json(const Solid& s) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(s.rotation(r, c));
  }
  const int n = s.kind == ShapeKind::kCapsule ? 2 : 3;
  nlohmann::json params = nlohmann::json::array();
  for (int i = 0; i < n; ++i) params.push_back(s.params[i]);
  return {{"label", s.label},
          {"kind", std::string(to_string(s.kind))},
          {"params", params},
          {"rotation", rot},
          {"translation", {s.translation.x, s.translation.y, s.translation.z}}};
}

inline nlohmann::json scene_to_json(const PhantomScene& scene) {
  nlohmann::json solids = nlohmann::json::array();
  for (const Solid& s : scene.solids) solids.push_back(solid_to_json(s));
  nlohmann::json doc{
      {"body_axis", {scene.body_axis.x(), scene.body_axis.y(), scene.body_axis.z()}},
      {"solids", solids},
      {"bed", nullptr},
      {"ground_truth",
       {{"volume_m3", scene.ground_truth.volume}, {"height_m", scene.ground_truth.height}}}};
  if (scene.bed) {
    const BedPatch& b = *scene.bed;
    doc["bed"] = {{"center", {b.center.x, b.center.y, b.center.z}},
                  {"half_x", b.half_x},
                  {"half_y", b.half_y}};
  }
  return doc;
}

namespace detail {

inline Point3 point_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kParseError, what + " must be an array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline PhantomScene scene_from_json(const nlohmann::json& doc) {
  try {
    PhantomScene scene;
    scene.body_axis = UnitVector(detail::point_from_json(doc.at("body_axis"), "body_axis"));
    for (const auto& j : doc.at("solids")) {
      Solid s;
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "ellipsoid") s.kind = ShapeKind::kEllipsoid;
      else if (kind == "capsule") s.kind = ShapeKind::kCapsule;
      else if (kind == "box") s.kind = ShapeKind::kBox;
      else throw Error(ErrorCode::kParseError, "unknown solid kind '" + kind + "'");
      const auto& params = j.at("params");
      const std::size_t n = s.kind == ShapeKind::kCapsule ? 2 : 3;
      if (!params.is_array() || params.size() != n) {
        throw Error(ErrorCode::kParseError, kind + " needs " + std::to_string(n) + " params");
      }
      s.params = {0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) s.params[i] = params[i].get<double>();
      const auto& rot = j.at("rotation");
      if (!rot.is_array() || rot.size() != 9) {
        throw Error(ErrorCode::kParseError, "rotation must hold 9 numbers (row-major)");
      }
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) s.rotation(r, c) = rot[3 * r + c].get<double>();
      }
      s.translation = detail::point_from_json(j.at("translation"), "translation");
      s.label = j.value("label", std::string(to_string(s.kind)));
      s.validate();
      scene.solids.push_back(std::move(s));
    }
    if (doc.contains("bed") && !doc["bed"].is_null()) {
      const auto& b = doc["bed"];
      scene.bed = BedPatch{detail::point_from_json(b.at("center"), "bed.center"),
                           b.at("half_x").get<double>(), b.at("half_y").get<double>()};
    }
    scene.ground_truth = {scene_volume(scene), scene_extent(scene, scene.body_axis)};
    if (doc.contains("ground_truth")) {
      scene.ground_truth.height = doc["ground_truth"].at("height_m").get<double>();
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("scene JSON: ") + e.what());
  }
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_PHANTOM_HPP_
