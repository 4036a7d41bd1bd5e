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

#ifndef BODYMETRICS_PREPROCESS_HPP_
#define BODYMETRICS_PREPROCESS_HPP_

// Cloud cleaning: depth-band clipping, RANSAC bed/floor removal, statistical
// outlier removal and voxel-grid downsampling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/kdtree.hpp"
#include "bodymetrics/parallel.hpp"

namespace bodymetrics {

/// Plane {p : normal . p = offset}.
struct Plane {
  UnitVector normal;
  double offset = 0.0;

  double signed_distance(const Point3& p) const { return dot(p, normal) - offset; }
};

struct SorResult {
  PointCloud kept;
  std::size_t removed_count = 0;
};

/// Mean distance from every point to its k nearest neighbours, itself
/// excluded.
inline std::vector<double> mean_knn_distances(const PointCloud& cloud, std::size_t k,
                                              unsigned threads = 0) {
  const KdTree tree(cloud);
  std::vector<double> mean(cloud.size());
  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    const auto nn = tree.knn(cloud[i], k + 1);
    double sum = 0.0;
    std::size_t used = 0;
    for (const Neighbor& n : nn) {
      if (n.index == i || used == k) continue;
      sum += std::sqrt(n.squared_distance);
      ++used;
    }
    mean[i] = sum / static_cast<double>(k);
  });
  return mean;
}

/// Keeps the points whose mean k-NN distance is at most m + alpha * s, where
/// m and s are the mean and population standard deviation over all points.
inline SorResult statistical_outlier_removal(const PointCloud& cloud, std::size_t k,
                                             double alpha, unsigned threads = 0) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "SOR needs k >= 1");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "SOR needs alpha > 0");
  if (cloud.size() <= k) {
    throw Error(ErrorCode::kTooFewPoints,
                "SOR with k=" + std::to_string(k) + " needs more than k points, got " +
                    std::to_string(cloud.size()));
  }
  const std::vector<double> mu = mean_knn_distances(cloud, k, threads);
  const double n = static_cast<double>(mu.size());
  double m = 0.0;
  for (double v : mu) m += v;
  m /= n;
  double var = 0.0;
  for (double v : mu) var += (v - m) * (v - m);
  const double s = std::sqrt(var / n);
  const double limit = m + alpha * s;

  std::vector<std::size_t> keep;
  keep.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] <= limit) keep.push_back(i);
  }
  return {cloud.select(keep), cloud.size() - keep.size()};
}

/// Keeps points whose projection onto `axis` lies in [lo, hi].
inline PointCloud depth_band_filter(const PointCloud& cloud, const UnitVector& axis,
                                    double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidArgument, "band requires lo < hi");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double t = dot(cloud[i], axis);
    if (t >= lo && t <= hi) keep.push_back(i);
  }
  return cloud.select(keep);
}

/// Complement of `indices` (sorted, unique, in range), in original order.
inline PointCloud remove_indices(const PointCloud& cloud,
                                 std::span<const std::size_t> indices) {
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= cloud.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "index " + std::to_string(indices[j]) + " >= cloud size " +
                      std::to_string(cloud.size()));
    }
    if (j > 0 && indices[j] <= indices[j - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "indices must be sorted and unique");
    }
  }
  std::vector<std::size_t> keep;
  keep.reserve(cloud.size() - indices.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (j < indices.size() && indices[j] == i) {
      ++j;
    } else {
      keep.push_back(i);
    }
  }
  return cloud.select(keep);
}

struct RansacResult {
  Plane plane;
  std::vector<std::size_t> inliers;  // ascending
};

namespace detail {

// Plane through three points, or nothing if they are (nearly) collinear.
inline std::optional<Plane> plane_through(const Point3& a, const Point3& b, const Point3& c) {
  const Vec3 ab = b - a, ac = c - a;
  const Vec3 n = cross(ab, ac);
  const double scale = norm(ab) * norm(ac);
  if (!(norm(n) > 1e-9 * scale) || scale == 0.0) return std::nullopt;
  const UnitVector unit(canonical_sign(n));
  return Plane{unit, dot(a, unit)};
}

}  // namespace detail

/// Dominant plane by 3-point RANSAC. The winning sample plane is returned
/// as-is (no least-squares refit), so a fixed seed reproduces it bit for bit.
inline RansacResult fit_plane_ransac(const PointCloud& cloud, double dist_thresh,
                                     std::size_t iterations, std::uint64_t seed) {
  if (!(dist_thresh > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dist_thresh must be > 0");
  if (iterations < 1) throw Error(ErrorCode::kInvalidArgument, "iterations must be >= 1");
  const auto pts = cloud.points();

  // Deterministic non-collinear triple, used to reject degenerate input and as
  // a fallback hypothesis.
  std::optional<Plane> fallback;
  if (pts.size() >= 3) {
    const Point3& a = pts[0];
    std::size_t bi = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (squared_distance(pts[i], a) > squared_distance(pts[bi], a)) bi = i;
    }
    const Vec3 ab = pts[bi] - a;
    std::size_t ci = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double area = norm(cross(ab, pts[i] - a));
      if (area > best) {
        best = area;
        ci = i;
      }
    }
    fallback = detail::plane_through(a, pts[bi], pts[ci]);
  }
  if (!fallback) {
    throw Error(ErrorCode::kDegenerateCloud, "no three non-collinear points for a plane");
  }

  auto count_inliers = [&](const Plane& plane) {
    std::size_t count = 0;
    for (const Point3& p : pts) {
      if (std::abs(plane.signed_distance(p)) <= dist_thresh) ++count;
    }
    return count;
  };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::optional<Plane> best_plane;
  std::size_t best_count = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const auto plane = detail::plane_through(pts[i], pts[j], pts[k]);
    if (!plane) continue;
    const std::size_t count = count_inliers(*plane);
    if (!best_plane || count > best_count) {
      best_plane = plane;
      best_count = count;
    }
  }
  if (!best_plane) best_plane = fallback;

  RansacResult result{*best_plane, {}};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::abs(result.plane.signed_distance(pts[i])) <= dist_thresh) {
      result.inliers.push_back(i);
    }
  }
  return result;
}

/// Replaces the points of every occupied cell of an origin-anchored cubic grid
/// by their centroid. Output is ordered by cell (x, then y, then z).
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw Error(ErrorCode::kInvalidArgument, "voxel size must be > 0");
  using Key = std::array<std::int64_t, 3>;
  std::vector<std::pair<Key, std::size_t>> cells;
  cells.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud[i];
    cells.push_back({{static_cast<std::int64_t>(std::floor(p.x / voxel)),
                      static_cast<std::int64_t>(std::floor(p.y / voxel)),
                      static_cast<std::int64_t>(std::floor(p.z / voxel))},
                     i});
  }
  std::sort(cells.begin(), cells.end());

  std::vector<Point3> out;
  for (std::size_t lo = 0; lo < cells.size();) {
    std::size_t hi = lo;
    Vec3 sum{};
    while (hi < cells.size() && cells[hi].first == cells[lo].first) {
      sum = sum + cloud[cells[hi].second];
      ++hi;
    }
    out.push_back(sum / static_cast<double>(hi - lo));
    lo = hi;
  }
  return PointCloud(std::move(out), cloud.frame_id());
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_PREPROCESS_HPP_
