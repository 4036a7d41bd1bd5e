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
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/phantom.hpp"
#include "test_util.hpp"

namespace bodymetrics {
namespace {

DepthFrame blank_frame(int w, int h) {
  CameraIntrinsics k{100.0, 120.0, w / 2.0, h / 2.0, w, h, 0.001};
  return {w, h, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h, 0), k};
}

DepthFrame random_frame(int w, int h, std::uint64_t seed) {
  DepthFrame f = blank_frame(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 5000);
  for (auto& v : f.data) v = static_cast<std::uint16_t>(d(rng) < 500 ? 0 : d(rng));
  return f;
}

DepthFrame humanoid_frame(std::uint64_t seed) {
  const PhantomScene s = make_humanoid(1.75);
  return render_depth(s, CameraIntrinsics::default_848x480(), default_camera(s, 2.0), seed);
}

TEST(Point3, RejectsNonFiniteCoordinates) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(PointCloud({{0, 0, 0}, {nan, 0, 0}}), Error);
  EXPECT_THROW(PointCloud({{0, std::numeric_limits<double>::infinity(), 0}}), Error);
  EXPECT_NO_THROW(PointCloud(std::vector<Point3>{}));
}

TEST(UnitVector, NormalisesAndRejectsZero) {
  const UnitVector u(3, 0, 4);
  EXPECT_DOUBLE_EQ(u.x(), 0.6);
  EXPECT_DOUBLE_EQ(u.z(), 0.8);
  EXPECT_THROW(UnitVector(0, 0, 0), Error);
}

TEST(CameraIntrinsics, ValidatesEveryField) {
  EXPECT_NO_THROW(CameraIntrinsics::default_848x480().validate());
  auto bad = [](auto mutate) {
    CameraIntrinsics k = CameraIntrinsics::default_848x480();
    mutate(k);
    try {
      k.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::kInvalidIntrinsics;
    }
    return false;
  };
  EXPECT_TRUE(bad([](auto& k) { k.fx = 0; }));
  EXPECT_TRUE(bad([](auto& k) { k.fy = -1; }));
  EXPECT_TRUE(bad([](auto& k) { k.width = 0; }));
  EXPECT_TRUE(bad([](auto& k) { k.depth_scale = 0; }));
  EXPECT_TRUE(bad([](auto& k) { k.cx = 848; }));
  EXPECT_TRUE(bad([](auto& k) { k.cy = -0.5; }));
}

TEST(DepthToCloud, PrincipalPixelMapsToOpticalAxis) {
  DepthFrame f = blank_frame(8, 6);
  f.data[3 * 8 + 4] = 1500;  // (u, v) = (cx, cy)
  const PointCloud c = depth_to_cloud(f, 0.0, 10.0);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (Point3{0.0, 0.0, 1.5}));
}

TEST(DepthToCloud, AllHolesGiveEmptyCloud) {
  EXPECT_TRUE(depth_to_cloud(blank_frame(16, 9), 0.0, 10.0).empty());
}

TEST(DepthToCloud, MalformedFrameRejected) {
  DepthFrame f = blank_frame(4, 4);
  f.data.pop_back();
  try {
    depth_to_cloud(f, 0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedFrame);
  }
}

// Independent pixel enumeration: every in-band non-zero pixel, row-major,
// through the pinhole equations written out here.
TEST(DepthToCloud, MatchesPixelEnumeration) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DepthFrame f = random_frame(37, 23, seed);
    const double lo = 0.8, hi = 3.9;
    std::vector<Point3> expect;
    for (int v = 0; v < f.height; ++v) {
      for (int u = 0; u < f.width; ++u) {
        const int d = f.data[v * f.width + u];
        const double z = d * f.intrinsics.depth_scale;
        if (d == 0 || z < lo || z > hi) continue;
        expect.push_back({(u - f.intrinsics.cx) * z / f.intrinsics.fx,
                          (v - f.intrinsics.cy) * z / f.intrinsics.fy, z});
      }
    }
    const PointCloud c = depth_to_cloud(f, lo, hi);
    ASSERT_EQ(c.size(), expect.size());
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i], expect[i]);
  }
}

TEST(DepthToCloud, DepthShiftIsPinholeCovariant) {
  const DepthFrame f = random_frame(20, 10, 11);
  DepthFrame g = f;
  const int shift = 250;  // raw units
  for (auto& v : g.data) {
    if (v != 0) v = static_cast<std::uint16_t>(v + shift);
  }
  const PointCloud a = depth_to_cloud(f, 0.0, 100.0);
  const PointCloud b = depth_to_cloud(g, 0.0, 100.0);
  ASSERT_EQ(a.size(), b.size());
  const double dz = shift * f.intrinsics.depth_scale;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(b[i].z, a[i].z + dz, 1e-12);
    EXPECT_NEAR(b[i].x, a[i].x * b[i].z / a[i].z, 1e-12);
    EXPECT_NEAR(b[i].y, a[i].y * b[i].z / a[i].z, 1e-12);
  }
}

TEST(DepthToCloud, PhantomExtentMatchesPinholeProjection) {
  const DepthFrame f = humanoid_frame(0);
  const PointCloud c = depth_to_cloud(f, 0.0, 10.0);
  // Extremal phantom points (head top, soles) sit at y = -/+0.875 m in the
  // camera frame and 2 m deep.
  const double analytic = 2 * 0.875;
  const AABB box = bounding_box(c);
  EXPECT_NEAR(box.extent().y, analytic, 0.01 * analytic);
}

TEST(MaskedDepth, EmptyAndFullMasks) {
  const DepthFrame f = random_frame(12, 7, 3);
  LabelMask zero{12, 7, std::vector<std::uint8_t>(84, 0)};
  LabelMask one{12, 7, std::vector<std::uint8_t>(84, 1)};
  EXPECT_TRUE(cloud_from_masked_depth(f, zero, 1, 0.0, 10.0).empty());
  EXPECT_EQ(cloud_from_masked_depth(f, one, 1, 0.0, 10.0), depth_to_cloud(f, 0.0, 10.0));
}

TEST(MaskedDepth, DimensionMismatch) {
  const DepthFrame f = random_frame(12, 7, 3);
  LabelMask m{7, 12, std::vector<std::uint8_t>(84, 0)};
  try {
    cloud_from_masked_depth(f, m, 1, 0.0, 10.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(MaskedDepth, TwoRegionsPartitionTheFrame) {
  const DepthFrame f = humanoid_frame(1);
  LabelMask m{f.width, f.height, std::vector<std::uint8_t>(f.data.size(), 0)};
  for (int v = 0; v < f.height; ++v) {
    for (int u = 0; u < f.width; ++u) m.labels[v * f.width + u] = v < 250 ? 1 : 2;
  }
  const PointCloud all = depth_to_cloud(f, 0.0, 10.0);
  const PointCloud a = cloud_from_masked_depth(f, m, 1, 0.0, 10.0);
  const PointCloud b = cloud_from_masked_depth(f, m, 2, 0.0, 10.0);
  ASSERT_EQ(a.size() + b.size(), all.size());
  using Key = std::tuple<double, double, double>;
  std::multiset<Key> lhs, rhs;
  for (const Point3& p : all) lhs.insert({p.x, p.y, p.z});
  for (const Point3& p : a) rhs.insert({p.x, p.y, p.z});
  for (const Point3& p : b) rhs.insert({p.x, p.y, p.z});
  EXPECT_EQ(lhs, rhs);
}

TEST(BoundingBox, Basics) {
  EXPECT_EQ(bounding_box(PointCloud({{1, 2, 3}})), (AABB{{1, 2, 3}, {1, 2, 3}}));
  EXPECT_EQ(bounding_box(PointCloud(testing::cube_corners())), (AABB{{0, 0, 0}, {1, 1, 1}}));
  try {
    bounding_box(PointCloud{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCloud);
  }
}

TEST(BoundingBox, MatchesLinearScanAndContainsEveryPoint) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = testing::uniform_box(1000, rng, -3.0, 7.0);
    Point3 lo = pts[0], hi = pts[0];
    for (const Point3& p : pts) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const AABB box = bounding_box(PointCloud(pts));
    EXPECT_EQ(box, (AABB{lo, hi}));
    for (const Point3& p : pts) EXPECT_TRUE(box.contains(p));
  }
}

TEST(PrincipalAxis, AxisAlignedAndTiltedLines) {
  std::vector<Point3> z, tilted;
  for (int i = 0; i < 20; ++i) {
    z.push_back({0, 0, 0.1 * i});
    tilted.push_back({0.3 * i, 0.3 * i, 0});
  }
  const UnitVector a = principal_axis(PointCloud(z));
  EXPECT_NEAR(a.x(), 0.0, 1e-12);
  EXPECT_NEAR(a.z(), 1.0, 1e-12);
  const UnitVector b = principal_axis(PointCloud(tilted));
  EXPECT_NEAR(b.x(), std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(b.y(), std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(b.z(), 0.0, 1e-6);
}

TEST(PrincipalAxis, CoincidentPointsAreDegenerate) {
  try {
    principal_axis(PointCloud({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCloud);
  }
}

TEST(PrincipalAxis, TieFallsBackToLongestBoxAxis) {
  // Isotropic in-plane covariance; the box is longer in y than in x.
  const std::vector<Point3> pts = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0},
                                   {0, 1.2, 0}, {0, -1.2, 0}, {1.2, 0, 0}, {-1.2, 0, 0}};
  const UnitVector a = principal_axis(PointCloud(pts));
  EXPECT_NEAR(std::abs(a.x()), 1.0, 1e-12);  // square box: first longest axis
  std::vector<Point3> stretched = pts;
  stretched.push_back({0, 0, 0});
  stretched.push_back({0, 1.5, 0});
  stretched.push_back({0, -1.5, 0});
  stretched.push_back({1.5, 0, 0});
  stretched.push_back({-1.5, 0, 0});
  const UnitVector b = principal_axis(PointCloud(stretched));
  EXPECT_NEAR(std::abs(b.x()), 1.0, 1e-12);
}

TEST(PrincipalAxis, ElongatedEllipsoidSampleFindsGenerationAxis) {
  Solid s = Solid::ellipsoid(0.1, 0.15, 0.6);
  s.rotation = Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 1, 0).normalized()).toRotationMatrix();
  const SampledCloud sample = sample_surface(make_scene({s}), 5000.0, 0.0, 9);
  const UnitVector a = principal_axis(sample.cloud);
  const Eigen::Vector3d gen = s.rotation.col(2);
  const double cosang = std::abs(a.x() * gen.x() + a.y() * gen.y() + a.z() * gen.z());
  EXPECT_LT(std::acos(std::min(1.0, cosang)), 2.0 * 3.14159265358979323846 / 180.0);
}

TEST(PrincipalAxis, InvariantUnderScaleAndTranslation) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Point3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back({3.0 * g(rng), g(rng), 0.5 * g(rng)});
  const UnitVector a = principal_axis(PointCloud(pts));
  std::vector<Point3> moved;
  for (const Point3& p : pts) moved.push_back(2.5 * p + Point3{10, -4, 7});
  const UnitVector b = principal_axis(PointCloud(moved));
  EXPECT_NEAR(std::abs(dot(a.vec(), b.vec())), 1.0, 1e-9);
}

}  // namespace
}  // namespace bodymetrics
