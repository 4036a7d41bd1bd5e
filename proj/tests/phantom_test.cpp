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


#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/hull.hpp"
#include "bodymetrics/metrics.hpp"
#include "bodymetrics/phantom.hpp"
#include "test_util.hpp"

namespace bodymetrics {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix3d tilt(double angle, Eigen::Vector3d axis) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// Membership written out from the shape definitions, independent of Solid.
bool inside(const Solid& s, const Point3& w) {
  const Eigen::Vector3d q =
      s.rotation.transpose() * Eigen::Vector3d(w.x - s.translation.x, w.y - s.translation.y,
                                               w.z - s.translation.z);
  const auto& p = s.params;
  switch (s.kind) {
    case ShapeKind::kEllipsoid:
      return std::pow(q.x() / p[0], 2) + std::pow(q.y() / p[1], 2) + std::pow(q.z() / p[2], 2) <= 1.0;
    case ShapeKind::kCapsule: {
      const double dy = std::max(0.0, std::abs(q.y()) - p[1] / 2);
      return q.x() * q.x() + dy * dy + q.z() * q.z() <= p[0] * p[0];
    }
    case ShapeKind::kBox:
      return 2 * std::abs(q.x()) <= p[0] && 2 * std::abs(q.y()) <= p[1] && 2 * std::abs(q.z()) <= p[2];
  }
  return false;
}

// Bounding box of a posed solid from its local corners (sphere-swept for
// capsules).
AABB solid_box(const Solid& s) {
  double hx = s.params[0], hy = s.params[1], hz = s.params[2];
  if (s.kind == ShapeKind::kCapsule) {
    hx = hz = s.params[0];
    hy = s.params[1] / 2 + s.params[0];
  } else if (s.kind == ShapeKind::kBox) {
    hx /= 2;
    hy /= 2;
    hz /= 2;
  }
  Point3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (int c = 0; c < 8; ++c) {
    const Eigen::Vector3d v = s.rotation * Eigen::Vector3d(c & 1 ? hx : -hx, c & 2 ? hy : -hy,
                                                           c & 4 ? hz : -hz);
    const Point3 w{v.x() + s.translation.x, v.y() + s.translation.y, v.z() + s.translation.z};
    lo = {std::min(lo.x, w.x), std::min(lo.y, w.y), std::min(lo.z, w.z)};
    hi = {std::max(hi.x, w.x), std::max(hi.y, w.y), std::max(hi.z, w.z)};
  }
  return {lo, hi};
}

double monte_carlo_volume(const Solid& s, std::size_t samples, std::uint64_t seed) {
  const AABB box = solid_box(s);
  const Vec3 e = box.extent();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    hits += inside(s, {box.min.x + e.x * u(rng), box.min.y + e.y * u(rng), box.min.z + e.z * u(rng)});
  }
  return double(hits) / samples * e.x * e.y * e.z;
}

// Ellipsoid area by 2-D midpoint quadrature over the parametrisation.
double quadrature_ellipsoid_area(double a, double b, double c) {
  const int n = 2000;
  double area = 0.0;
  for (int i = 0; i < n; ++i) {
    const double th = kPi * (i + 0.5) / n;
    for (int j = 0; j < 2 * n; ++j) {
      const double ph = kPi * (j + 0.5) / n;
      const Eigen::Vector3d dth(a * std::cos(th) * std::cos(ph), b * std::cos(th) * std::sin(ph),
                                -c * std::sin(th));
      const Eigen::Vector3d dph(-a * std::sin(th) * std::sin(ph), b * std::sin(th) * std::cos(ph), 0);
      area += dth.cross(dph).norm();
    }
  }
  return area * (kPi / n) * (kPi / n);
}

TEST(Solid, Validation) {
  EXPECT_NO_THROW(Solid::ellipsoid(1, 2, 3).validate());
  EXPECT_THROW(Solid::ellipsoid(1, 0, 3).validate(), Error);
  EXPECT_THROW(Solid::capsule(-1, 2).validate(), Error);
  EXPECT_THROW(Solid::box(1, 1, std::nan("")).validate(), Error);
  Solid skew = Solid::box(1, 1, 1);
  skew.rotation(0, 1) = 0.1;
  EXPECT_THROW(skew.validate(), Error);
  Solid mirror = Solid::box(1, 1, 1);
  mirror.rotation(0, 0) = -1.0;
  EXPECT_THROW(mirror.validate(), Error);
  EXPECT_THROW(make_scene({Solid::capsule(0.1, 0.0)}), Error);
}

TEST(Solid, AnalyticVolumesMatchMonteCarlo) {
  std::vector<Solid> shapes = {Solid::ellipsoid(0.3, 0.5, 0.2, {1, 2, 3}),
                               Solid::capsule(0.15, 0.6, {-1, 0, 0.5}),
                               Solid::box(0.4, 0.25, 0.7, {0, -2, 1})};
  for (Solid s : shapes) {
    s.rotation = tilt(0.7, {1, 2, -0.5});
    const double mc = monte_carlo_volume(s, 10'000'000, 11);
    EXPECT_NEAR(mc, s.analytic_volume(), 0.005 * s.analytic_volume()) << to_string(s.kind);
  }
}

TEST(Solid, SurfaceAreas) {
  EXPECT_NEAR(Solid::ellipsoid(1, 1, 1).surface_area(), 4 * kPi, 1e-12);
  EXPECT_NEAR(Solid::capsule(1, 2).surface_area(), 4 * kPi + 4 * kPi, 1e-12);
  EXPECT_DOUBLE_EQ(Solid::box(1, 2, 3).surface_area(), 22.0);
  for (auto abc : {std::array{0.3, 0.5, 0.2}, std::array{0.1, 0.1, 0.4}, std::array{0.5, 0.2, 0.2}}) {
    const double q = quadrature_ellipsoid_area(abc[0], abc[1], abc[2]);
    EXPECT_NEAR(Solid::ellipsoid(abc[0], abc[1], abc[2]).surface_area(), q, 1e-5 * q);
  }
}

TEST(Sampling, UnitSphereWithoutNoiseIsOnTheSurface) {
  const SampledCloud s = sample_surface(make_scene({Solid::ellipsoid(1, 1, 1, {0.5, -1, 2})}),
                                        2000.0, 0.0, 3);
  ASSERT_GT(s.cloud.size(), 20000u);
  for (const Point3& p : s.cloud) EXPECT_NEAR(distance(p, {0.5, -1, 2}), 1.0, 1e-9);
}

TEST(Sampling, SurfacePointsLieOnEveryShape) {
  std::vector<Solid> shapes = {Solid::ellipsoid(0.3, 0.5, 0.2), Solid::capsule(0.15, 0.6),
                               Solid::box(0.4, 0.25, 0.7)};
  for (Solid s : shapes) {
    s.rotation = tilt(1.2, {0.3, -1, 0.4});
    s.translation = {0.2, 0.1, -0.3};
    const SampledCloud c = sample_surface(make_scene({s}), 20000.0, 0.0, 4);
    for (const Point3& p : c.cloud) {
      const Point3 q = s.to_local(p);
      const double d = [&] {
        switch (s.kind) {
          case ShapeKind::kEllipsoid:
            return std::sqrt(std::pow(q.x / 0.3, 2) + std::pow(q.y / 0.5, 2) + std::pow(q.z / 0.2, 2)) - 1.0;
          case ShapeKind::kCapsule: {
            const double dy = std::max(0.0, std::abs(q.y) - 0.3);
            return std::sqrt(q.x * q.x + dy * dy + q.z * q.z) - 0.15;
          }
          case ShapeKind::kBox:
            return std::max({std::abs(q.x) - 0.2, std::abs(q.y) - 0.125, std::abs(q.z) - 0.35});
        }
        return 1.0;
      }();
      ASSERT_NEAR(d, 0.0, 1e-9) << to_string(s.kind);
    }
  }
}

// Archimedes: a band of height h on a unit sphere has area 2 pi h, so a
// uniform sample puts half its points in |y| < 1/2. Box faces get shares
// proportional to their areas.
TEST(Sampling, AreaUniform) {
  const SampledCloud s = sample_surface(make_scene({Solid::ellipsoid(1, 1, 1)}), 8000.0, 0.0, 5);
  std::size_t band = 0;
  for (const Point3& p : s.cloud) band += std::abs(p.y) < 0.5;
  EXPECT_NEAR(double(band) / s.cloud.size(), 0.5, 0.01);

  const SampledCloud b = sample_surface(make_scene({Solid::box(1, 2, 3)}), 5000.0, 0.0, 6);
  std::size_t on_z = 0;
  for (const Point3& p : b.cloud) on_z += std::abs(std::abs(p.z) - 1.5) < 1e-12;
  EXPECT_NEAR(double(on_z) / b.cloud.size(), 4.0 / 22.0, 0.01);
}

TEST(Sampling, DensityDoublingDoublesCount) {
  const PhantomScene s = make_humanoid(1.75);
  const double n1 = double(sample_surface(s, 3000.0, 0.0, 1).cloud.size());
  const double n2 = double(sample_surface(s, 6000.0, 0.0, 1).cloud.size());
  EXPECT_NEAR(n2 / n1, 2.0, 0.02);
}

TEST(Sampling, DenseSphereHull) {
  const SampledCloud s = sample_surface(make_scene({Solid::ellipsoid(1, 1, 1)}), 5000.0 / (4 * kPi),
                                        0.0, 7);
  ASSERT_GE(s.cloud.size(), 5000u);
  const double v = hull_volume(convex_hull(s.cloud));
  EXPECT_LE(v, 4 * kPi / 3);
  EXPECT_GT(v, 0.97 * 4 * kPi / 3);
}

TEST(Sampling, ReproducibleAndLabelled) {
  PhantomScene s = make_humanoid(1.7, 1.0, HumanoidPose::kArmsOut);
  s.bed = bed_under(s);
  const SampledCloud a = sample_surface(s, 5000.0, 0.003, 99);
  const SampledCloud b = sample_surface(s, 5000.0, 0.003, 99);
  EXPECT_EQ(a.cloud, b.cloud);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.cloud, sample_surface(s, 5000.0, 0.003, 100).cloud);
  ASSERT_EQ(a.labels.size(), a.cloud.size());
  std::size_t total = 0;
  for (int label = kBedLabel; label < int(s.solids.size()); ++label) {
    const std::size_t n = a.with_label(label).size();
    EXPECT_GT(n, 0u) << label;
    total += n;
  }
  EXPECT_EQ(total, a.cloud.size());
  for (int l : a.labels) EXPECT_TRUE(l == kBedLabel || (l >= 0 && l < int(s.solids.size())));
  EXPECT_THROW(sample_surface(s, 0.0, 0.0, 1), Error);
  EXPECT_THROW(sample_surface(s, 10.0, -1.0, 1), Error);
}

TEST(Humanoid, HeightIsExact) {
  for (auto pose : {HumanoidPose::kArmsDown, HumanoidPose::kArmsOut}) {
    for (double h : {0.5, 1.2, 1.75, 2.5}) {
      const PhantomScene s = make_humanoid(h, 1.0, pose);
      EXPECT_EQ(s.ground_truth.height, h);
      const auto [lo, hi] = scene_span(s, UnitVector::y_axis());
      EXPECT_NEAR(lo, 0.0, 1e-12);
      EXPECT_NEAR(hi, h, 1e-12);
      EXPECT_EQ(s.solids.size(), 6u);
    }
  }
}

TEST(Humanoid, RangeChecks) {
  EXPECT_THROW(make_humanoid(0.49), Error);
  EXPECT_THROW(make_humanoid(2.51), Error);
  EXPECT_THROW(make_humanoid(1.75, 0.0), Error);
  EXPECT_THROW(make_humanoid(1.75, 20.0), Error);
  try {
    make_humanoid(3.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParameterOutOfRange);
  }
}

// Volume recomputed from the proportion table with closed-form solid volumes.
double table_volume(double H, double s) {
  namespace t = humanoid_table;
  const double head = 4 * kPi / 3 * (t::kHeadSemiX * H * s) * (t::kHeadSemiY * H) * (t::kHeadSemiZ * H * s);
  const double torso = 4 * kPi / 3 * (t::kTorsoSemiX * H * s) * (t::kTorsoSemiY * H) * (t::kTorsoSemiZ * H * s);
  const double leg_len = H * (1 - 2 * t::kHeadSemiY - t::kNeckGap - 2 * t::kTorsoSemiY - t::kHipGap);
  const double lr = t::kLegRadius * H * s, ar = t::kArmRadius * H * s;
  // A capsule of total length L and radius r holds pi r^2 (L - 2r) + 4/3 pi r^3.
  auto capsule = [](double r, double len) { return kPi * r * r * (len - 2 * r) + 4 * kPi / 3 * r * r * r; };
  return head + torso + 2 * capsule(lr, leg_len) + 2 * capsule(ar, t::kArmLength * H);
}

TEST(Humanoid, BuildScalingMatchesTableRecomputation) {
  for (double build : {0.8, 1.0, 1.25}) {
    for (auto pose : {HumanoidPose::kArmsDown, HumanoidPose::kArmsOut}) {
      const PhantomScene s = make_humanoid(1.75, build, pose);
      EXPECT_NEAR(s.ground_truth.volume, table_volume(1.75, build), 1e-12);
      EXPECT_NEAR(s.ground_truth.volume, scene_volume(s), 1e-15);
      EXPECT_EQ(s.ground_truth.height, 1.75);
    }
  }
}

TEST(Humanoid, SolidsDoNotOverlap) {
  for (auto pose : {HumanoidPose::kArmsDown, HumanoidPose::kArmsOut}) {
    for (double build : {0.7, 1.0, 1.4}) {
      const PhantomScene s = make_humanoid(1.75, build, pose);
      const SampledCloud c = sample_surface(s, 20000.0, 0.0, 1);
      for (std::size_t i = 0; i < c.cloud.size(); ++i) {
        for (std::size_t j = 0; j < s.solids.size(); ++j) {
          if (int(j) == c.labels[i]) continue;
          ASSERT_FALSE(inside(s.solids[j], c.cloud[i]))
              << s.solids[c.labels[i]].label << " inside " << s.solids[j].label;
        }
      }
    }
  }
}

TEST(Humanoid, ArmsOutWholeHullOverestimatesWhileSlabsTrack) {
  const PhantomScene s = make_humanoid(1.75, 1.0, HumanoidPose::kArmsOut);
  const PointCloud c = sample_surface(s, 52000.0, 0.0, 0).cloud;
  const double truth = s.ground_truth.volume;
  const double whole = hull_volume(convex_hull(c));
  const double slabs = segmented_volume(c, UnitVector::y_axis(), 50).total_volume;
  EXPECT_GT(whole, 1.15 * truth);
  EXPECT_NEAR(slabs, truth, 0.05 * truth);
}

TEST(Render, EmptySceneIsAllHoles) {
  const CameraIntrinsics k = CameraIntrinsics::default_848x480();
  const DepthFrame f = render_depth(PhantomScene{}, k, CameraPose::facing(0.0, 2.0), 1);
  EXPECT_EQ(f.width, 848);
  EXPECT_EQ(f.height, 480);
  EXPECT_EQ(f.intrinsics, k);
  EXPECT_TRUE(std::all_of(f.data.begin(), f.data.end(), [](auto d) { return d == 0; }));
}

TEST(Render, SphereOnAxisNearestDepth) {
  const CameraIntrinsics k = CameraIntrinsics::default_848x480();
  for (double r : {0.1, 0.3}) {
    const PhantomScene s = make_scene({Solid::ellipsoid(r, r, r)});
    const DepthFrame f = render_depth(s, k, CameraPose::facing(0.0, 2.0), 2, 0.0);
    std::uint16_t lo = 65535;
    for (auto d : f.data) {
      if (d != 0) lo = std::min(lo, d);
    }
    EXPECT_NEAR(lo * k.depth_scale, 2.0 - r, k.depth_scale) << r;
    // The sphere's silhouette spans about 2 fy r / 2 pixels vertically.
    int rows = 0;
    for (int v = 0; v < f.height; ++v) {
      bool hit = false;
      for (int u = 0; u < f.width; ++u) hit |= f.at(u, v) != 0;
      rows += hit;
    }
    EXPECT_NEAR(rows, k.fy * r / std::sqrt(4.0 - r * r) * 2, 3.0);
  }
}

TEST(Render, ReproducibleAndNoisy) {
  const PhantomScene s = make_humanoid(1.75);
  const CameraIntrinsics k = CameraIntrinsics::default_848x480();
  const CameraPose pose = default_camera(s, 2.0);
  const DepthFrame a = render_depth(s, k, pose, 5);
  EXPECT_EQ(a, render_depth(s, k, pose, 5));
  const DepthFrame b = render_depth(s, k, pose, 6);
  EXPECT_NE(a, b);
  const DepthFrame clean = render_depth(s, k, pose, 5, 0.0);
  // Noise changes depths, never coverage.
  double sq = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    ASSERT_EQ(a.data[i] == 0, clean.data[i] == 0);
    if (a.data[i] != 0) {
      sq += std::pow((double(a.data[i]) - clean.data[i]) * k.depth_scale, 2);
      ++hits;
    }
  }
  EXPECT_GT(hits, 20000u);
  EXPECT_NEAR(std::sqrt(sq / hits), 0.003, 0.0005);
}

TEST(Camera, FacingPoseMapsHeightToImageRows) {
  const CameraPose pose = CameraPose::facing(0.9, 2.0);
  EXPECT_EQ(pose.apply({0.0, 0.9, 0.0}), (Point3{0.0, 0.0, 2.0}));
  const Point3 head = pose.apply({0.1, 1.75, 0.2});
  EXPECT_NEAR(head.x, 0.1, 1e-15);
  EXPECT_NEAR(head.y, -0.85, 1e-15);
  EXPECT_NEAR(head.z, 1.8, 1e-15);
}

TEST(SceneJson, RoundTrip) {
  PhantomScene s = make_humanoid(1.6, 1.2, HumanoidPose::kArmsOut);
  s.bed = bed_under(s, 0.01);
  const nlohmann::json j = scene_to_json(s);
  const PhantomScene r = scene_from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(r.solids.size(), s.solids.size());
  for (std::size_t i = 0; i < s.solids.size(); ++i) {
    EXPECT_EQ(r.solids[i].kind, s.solids[i].kind);
    EXPECT_EQ(r.solids[i].params, s.solids[i].params);
    EXPECT_EQ(r.solids[i].rotation, s.solids[i].rotation);
    EXPECT_EQ(r.solids[i].translation, s.solids[i].translation);
    EXPECT_EQ(r.solids[i].label, s.solids[i].label);
  }
  ASSERT_TRUE(r.bed.has_value());
  EXPECT_EQ(r.bed->center, s.bed->center);
  EXPECT_EQ(r.ground_truth.volume, s.ground_truth.volume);
  EXPECT_EQ(r.ground_truth.height, s.ground_truth.height);
  EXPECT_EQ(sample_surface(r, 3000.0, 0.002, 8).cloud, sample_surface(s, 3000.0, 0.002, 8).cloud);
}

TEST(SceneJson, Malformed) {
  for (const char* text : {R"({})", R"({"solids": 3})", R"({"solids": [{"kind": "torus"}]})",
                           R"({"solids": [{"kind": "box", "params": [1, 2]}]})"}) {
    try {
      scene_from_json(nlohmann::json::parse(text));
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParseError) << text;
    }
  }
}

}  // namespace
}  // namespace bodymetrics
