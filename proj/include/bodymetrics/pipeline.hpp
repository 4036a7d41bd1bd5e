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


#ifndef BODYMETRICS_PIPELINE_HPP_
#define BODYMETRICS_PIPELINE_HPP_

// End-to-end estimator: ingest, clean, complete, measure. Every stage is
// timed and its point counts are logged.

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/error.hpp"
#include "bodymetrics/metrics.hpp"
#include "bodymetrics/preprocess.hpp"

namespace bodymetrics {

enum class AxisMode { kPca, kX, kY, kZ };

/// Back-surface completion for single-view input. kMirror reflects the
/// visible surface through a plane normal to the viewing axis; kAuto mirrors
/// depth-frame input only.
enum class Completion { kAuto, kNone, kMirror };

inline std::string_view to_string(AxisMode m) {
  switch (m) {
    case AxisMode::kPca: return "pca";
    case AxisMode::kX: return "x";
    case AxisMode::kY: return "y";
    case AxisMode::kZ: return "z";
  }
  return "pca";
}

inline std::string_view to_string(Completion c) {
  switch (c) {
    case Completion::kAuto: return "auto";
    case Completion::kNone: return "none";
    case Completion::kMirror: return "mirror";
  }
  return "auto";
}

struct PipelineConfig {
  double band_lo = 0.0;   // m along the camera axis
  double band_hi = 10.0;  // m
  bool ransac = false;
  double ransac_thresh = 0.01;  // m
  std::size_t ransac_iterations = 500;
  std::uint64_t seed = 0;
  std::size_t sor_k = 20;
  double sor_alpha = 2.0;
  double voxel = 0.005;  // m, 0 disables
  AxisMode axis = AxisMode::kPca;
  std::size_t n_slabs = 50;
  std::size_t min_slab_points = 10;
  double trim = 0.0;
  double density = 1000.0;  // kg/m^3
  Completion completion = Completion::kAuto;
  double mirror_quantile = 0.99;

  /// Throws kParameterOutOfRange naming the first offending field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& rule) {
      throw Error(ErrorCode::kParameterOutOfRange, field + " " + rule);
    };
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(band_lo) || band_lo < 0.0) fail("band_lo", "must be a finite value >= 0");
    if (!finite(band_hi) || !(band_hi > band_lo)) fail("band_hi", "must exceed band_lo");
    if (!finite(ransac_thresh) || !(ransac_thresh > 0.0)) fail("ransac_thresh", "must be > 0");
    if (ransac_iterations < 1) fail("ransac_iterations", "must be >= 1");
    if (sor_k < 1) fail("sor_k", "must be >= 1");
    if (!finite(sor_alpha) || !(sor_alpha > 0.0)) fail("sor_alpha", "must be > 0");
    if (!finite(voxel) || voxel < 0.0) fail("voxel", "must be >= 0 (0 disables)");
    if (n_slabs < 1) fail("n_slabs", "must be >= 1");
    if (min_slab_points < 4) fail("min_slab_points", "must be >= 4");
    if (!finite(trim) || trim < 0.0 || trim >= 0.5) fail("trim", "must lie in [0, 0.5)");
    if (!finite(density) || !(density > 0.0)) fail("density", "must be > 0");
    if (!finite(mirror_quantile) || !(mirror_quantile > 0.0) || mirror_quantile > 1.0) {
      fail("mirror_quantile", "must lie in (0, 1]");
    }
  }
};

struct StageRecord {
  std::string name;
  std::size_t points_in = 0;
  std::size_t points_out = 0;
  double duration_ms = 0.0;
};

using PipelineLog = std::vector<StageRecord>;
using PipelineInput = std::variant<PointCloud, DepthFrame>;

/// Keeps the points at or in front of the mirror_quantile depth along +z and
/// appends their reflection through that depth. A high quantile rather than
/// the maximum keeps depth noise from pushing the plane backwards.
inline PointCloud mirror_complete(const PointCloud& cloud, double quantile) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "nothing to complete");
  std::vector<double> z(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) z[i] = cloud[i].z;
  std::sort(z.begin(), z.end());
  const double plane = detail::nearest_rank(z, quantile);
  std::vector<Point3> out;
  out.reserve(2 * cloud.size());
  for (const Point3& p : cloud) {
    if (p.z <= plane) out.push_back(p);
  }
  const std::size_t front = out.size();
  for (std::size_t i = 0; i < front; ++i) {
    const Point3 p = out[i];
    out.push_back({p.x, p.y, 2.0 * plane - p.z});
  }
  return PointCloud(std::move(out), cloud.frame_id());
}

namespace detail {

class StageTimer {
 public:
  StageTimer(PipelineLog* log, std::string name, std::size_t points_in)
      : log_(log), name_(std::move(name)), in_(points_in),
        start_(std::chrono::steady_clock::now()) {}

  const std::string& name() const { return name_; }

  void finish(std::size_t points_out) {
    if (!log_) return;
    const std::chrono::duration<double, std::milli> dt =
        std::chrono::steady_clock::now() - start_;
    log_->push_back({name_, in_, points_out, dt.count()});
  }

 private:
  PipelineLog* log_;
  std::string name_;
  std::size_t in_;
  std::chrono::steady_clock::time_point start_;
};

/// Runs fn inside a named, timed stage. Errors leave annotated with the stage.
template <typename Fn>
auto run_stage(PipelineLog* log, const std::string& name, std::size_t points_in, Fn&& fn) {
  StageTimer timer(log, name, points_in);
  try {
    auto result = fn();
    timer.finish(result.size());
    return result;
  } catch (const Error& e) {
    throw e.with_stage(name);
  }
}

}  // namespace detail

/// ingest -> band filter -> [RANSAC] -> SOR -> [voxel] -> [completion] ->
/// axis -> segmented volume -> height -> weight.
inline BodyEstimate run_pipeline(const PipelineInput& input, const PipelineConfig& config,
                                 PipelineLog* log = nullptr, unsigned threads = 0) {
  try {
    config.validate();
  } catch (const Error& e) {
    throw e.with_stage("config");
  }
  const bool from_frame = std::holds_alternative<DepthFrame>(input);

  PointCloud cloud = detail::run_stage(log, "ingest", 0, [&] {
    if (const auto* frame = std::get_if<DepthFrame>(&input)) {
      return depth_to_cloud(*frame, 0.0, std::numeric_limits<double>::infinity());
    }
    return std::get<PointCloud>(input);
  });

  cloud = detail::run_stage(log, "band_filter", cloud.size(), [&] {
    PointCloud out =
        depth_band_filter(cloud, UnitVector::z_axis(), config.band_lo, config.band_hi);
    if (out.empty()) {
      throw Error(ErrorCode::kEmptyCloud, "no point lies inside the depth band");
    }
    return out;
  });

  if (config.ransac) {
    cloud = detail::run_stage(log, "ransac", cloud.size(), [&] {
      const RansacResult fit = fit_plane_ransac(cloud, config.ransac_thresh,
                                                config.ransac_iterations, config.seed);
      PointCloud out = remove_indices(cloud, fit.inliers);
      if (out.empty()) throw Error(ErrorCode::kEmptyCloud, "every point lies on the plane");
      return out;
    });
  }

  cloud = detail::run_stage(log, "sor", cloud.size(), [&] {
    return statistical_outlier_removal(cloud, config.sor_k, config.sor_alpha, threads).kept;
  });

  if (config.voxel > 0.0) {
    cloud = detail::run_stage(log, "voxel", cloud.size(),
                              [&] { return voxel_downsample(cloud, config.voxel); });
  }

  const bool mirror = config.completion == Completion::kMirror ||
                      (config.completion == Completion::kAuto && from_frame);
  if (mirror) {
    cloud = detail::run_stage(log, "completion", cloud.size(),
                              [&] { return mirror_complete(cloud, config.mirror_quantile); });
  }

  UnitVector axis;
  detail::run_stage(log, "axis", cloud.size(), [&] {
    switch (config.axis) {
      case AxisMode::kPca: axis = principal_axis(cloud); break;
      case AxisMode::kX: axis = UnitVector::x_axis(); break;
      case AxisMode::kY: axis = UnitVector::y_axis(); break;
      case AxisMode::kZ: axis = UnitVector::z_axis(); break;
    }
    return cloud;
  });

  BodyEstimate est;
  est.axis_used = axis;
  est.density_used = config.density;
  detail::run_stage(log, "volume", cloud.size(), [&] {
    est.volume_report =
        segmented_volume(cloud, axis, config.n_slabs, config.min_slab_points, threads);
    est.volume = est.volume_report.total_volume;
    return cloud;
  });
  detail::run_stage(log, "height", cloud.size(), [&] {
    est.height = estimate_height(cloud, axis, config.trim);
    return cloud;
  });
  detail::run_stage(log, "weight", cloud.size(), [&] {
    est.weight = estimate_weight(est.volume, config.density);
    return cloud;
  });
  return est;
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_PIPELINE_HPP_
