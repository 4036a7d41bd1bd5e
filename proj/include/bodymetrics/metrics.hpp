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


#ifndef BODYMETRICS_METRICS_HPP_
#define BODYMETRICS_METRICS_HPP_

// Body estimators: slab-segmented hull volume, axis-extent height and the
// density weight model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/error.hpp"
#include "bodymetrics/hull.hpp"
#include "bodymetrics/parallel.hpp"

namespace bodymetrics {

/// Equal-width intervals along an axis. Slab i holds the points whose
/// projection t satisfies boundaries[i] <= t < boundaries[i+1]; the last slab
/// is closed on both ends.
struct SlabPartition {
  UnitVector axis;
  std::vector<double> boundaries;
  std::vector<PointCloud> slabs;
  std::vector<std::vector<std::size_t>> members;  // input indices per slab

  std::size_t slab_count() const { return slabs.size(); }
};

struct VolumeReport {
  double total_volume = 0.0;
  std::vector<double> slab_volumes;
  std::size_t skipped_slabs = 0;
  std::size_t slab_count = 0;
};

struct BodyEstimate {
  double volume = 0.0;
  double height = 0.0;
  double weight = 0.0;
  double density_used = 0.0;
  VolumeReport volume_report;
  UnitVector axis_used;
};

namespace detail {

inline std::vector<double> project(std::span<const Point3> points, const UnitVector& axis) {
  std::vector<double> t(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) t[i] = dot(points[i], axis);
  return t;
}

inline std::vector<double> slab_boundaries(double lo, double hi, std::size_t n) {
  std::vector<double> b(n + 1);
  const double width = hi - lo;
  for (std::size_t i = 0; i <= n; ++i) {
    b[i] = lo + width * static_cast<double>(i) / static_cast<double>(n);
  }
  b[0] = lo;
  b[n] = hi;
  return b;
}

inline bool strictly_ascending(const std::vector<double>& b) {
  for (std::size_t i = 1; i < b.size(); ++i) {
    if (!(b[i - 1] < b[i])) return false;
  }
  return true;
}

/// Slab index of t, consistent with the stored boundaries rather than with
/// the real-valued interval arithmetic.
inline std::size_t slab_of(double t, const std::vector<double>& b) {
  const std::size_t n = b.size() - 1;
  const double width = b[n] - b[0];
  double guess = std::floor((t - b[0]) / width * static_cast<double>(n));
  std::size_t i = guess <= 0.0 ? 0
                  : guess >= static_cast<double>(n - 1)
                      ? n - 1
                      : static_cast<std::size_t>(guess);
  while (i > 0 && t < b[i]) --i;
  while (i + 1 < n && t >= b[i + 1]) ++i;
  return i;
}

}  // namespace detail

inline SlabPartition slab_partition(const PointCloud& cloud, const UnitVector& axis,
                                    std::size_t n_slabs) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "cannot partition an empty cloud");
  if (n_slabs == 0) throw Error(ErrorCode::kInvalidArgument, "n_slabs must be at least 1");
  const std::vector<double> t = detail::project(cloud.points(), axis);
  const auto [lo_it, hi_it] = std::minmax_element(t.begin(), t.end());
  const double lo = *lo_it;
  const double hi = *hi_it;

  SlabPartition part;
  part.axis = axis;
  if (hi > lo) part.boundaries = detail::slab_boundaries(lo, hi, n_slabs);
  // Zero extent, or an extent too small to hold n distinct boundaries.
  if (hi == lo || !detail::strictly_ascending(part.boundaries)) {
    part.boundaries = {lo, hi};
  }
  const std::size_t n = part.boundaries.size() - 1;
  part.members.assign(n, {});
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::size_t s = n == 1 ? 0 : detail::slab_of(t[i], part.boundaries);
    part.members[s].push_back(i);
  }
  part.slabs.reserve(n);
  for (const auto& m : part.members) part.slabs.push_back(cloud.select(m));
  return part;
}

/// Sum of per-slab hull volumes. Slabs below min_slab_points, or whose hull
/// is degenerate, contribute 0 and are counted as skipped. Slab hulls run in
/// parallel; the total is reduced in slab order.
inline VolumeReport segmented_volume(const PointCloud& cloud, const UnitVector& axis,
                                     std::size_t n_slabs, std::size_t min_slab_points = 10,
                                     unsigned threads = 1) {
  if (min_slab_points < 4) {
    throw Error(ErrorCode::kInvalidArgument, "min_slab_points must be at least 4");
  }
  const SlabPartition part = slab_partition(cloud, axis, n_slabs);
  const std::size_t n = part.slab_count();
  std::vector<double> volumes(n, 0.0);
  std::vector<char> skipped(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    const PointCloud& slab = part.slabs[i];
    if (slab.size() < min_slab_points) {
      skipped[i] = 1;
      return;
    }
    try {
      volumes[i] = hull_volume(convex_hull(slab));
    } catch (const Error& e) {
      if (!e.is_degenerate_hull()) throw;
      skipped[i] = 1;
    }
  });
  VolumeReport report;
  report.slab_count = n;
  report.slab_volumes = std::move(volumes);
  for (std::size_t i = 0; i < n; ++i) {
    report.total_volume += report.slab_volumes[i];
    report.skipped_slabs += static_cast<std::size_t>(skipped[i]);
  }
  return report;
}

namespace detail {

/// Nearest-rank quantile of sorted data: the ceil(q n)-th smallest value,
/// clamped to [1, n]. The 1e-9 guard keeps q n products such as 0.99 * 100
/// from rounding up a rank.
inline double nearest_rank(const std::vector<double>& sorted, double q) {
  const double n = static_cast<double>(sorted.size());
  double rank = std::ceil(q * n - 1e-9);
  rank = std::clamp(rank, 1.0, n);
  return sorted[static_cast<std::size_t>(rank) - 1];
}

}  // namespace detail

/// Extent of the cloud along axis between the trim and 1 - trim quantiles.
/// trim = 0 is exactly max - min.
inline double estimate_height(const PointCloud& cloud, const UnitVector& axis,
                              double percentile_trim) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "cannot measure an empty cloud");
  if (!(percentile_trim >= 0.0 && percentile_trim < 0.5)) {
    throw Error(ErrorCode::kParameterOutOfRange, "percentile_trim must lie in [0, 0.5)");
  }
  std::vector<double> t = detail::project(cloud.points(), axis);
  if (percentile_trim == 0.0) {
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    return *hi - *lo;
  }
  std::sort(t.begin(), t.end());
  return detail::nearest_rank(t, 1.0 - percentile_trim) -
         detail::nearest_rank(t, percentile_trim);
}

/// Pinhole similar triangles: a bounding box of h pixels at depth d spans
/// h d / fy metres.
inline double estimate_height_image(double bbox_px_height, double median_depth,
                                    const CameraIntrinsics& intr) {
  if (!(intr.fy > 0.0) || !std::isfinite(intr.fy)) {
    throw Error(ErrorCode::kInvalidIntrinsics, "fy must be positive");
  }
  if (!(bbox_px_height > 0.0) || !std::isfinite(bbox_px_height)) {
    throw Error(ErrorCode::kInvalidArgument, "bbox_px_height must be positive");
  }
  if (!(median_depth > 0.0) || !std::isfinite(median_depth)) {
    throw Error(ErrorCode::kInvalidArgument, "median_depth must be positive");
  }
  return bbox_px_height * median_depth / intr.fy;
}

inline double estimate_weight(double volume, double density) {
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw Error(ErrorCode::kNonPositiveDensity, "density must be positive");
  }
  if (!(volume >= 0.0) || !std::isfinite(volume)) {
    throw Error(ErrorCode::kInvalidArgument, "volume must be non-negative");
  }
  return volume * density;
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_METRICS_HPP_
