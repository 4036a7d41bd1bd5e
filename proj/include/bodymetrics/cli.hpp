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


#ifndef BODYMETRICS_CLI_HPP_
#define BODYMETRICS_CLI_HPP_

// The `bodymetrics` command line: convert, estimate and phantom subcommands.
// Exit codes: 0 success, 2 usage/config/parse, 3 I/O, 4 pipeline.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bodymetrics/depth_io.hpp"
#include "bodymetrics/error.hpp"
#include "bodymetrics/file_util.hpp"
#include "bodymetrics/phantom.hpp"
#include "bodymetrics/pipeline.hpp"
#include "bodymetrics/ply.hpp"
#include "bodymetrics/report.hpp"

namespace bodymetrics::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitPipeline = 4;

/// Reading or parsing inputs: I/O failures are 3, everything else 2.
inline int input_exit_code(const Error& e) {
  return e.code() == ErrorCode::kIoError ? kExitIo : kExitUsage;
}

/// BODYMETRICS_THREADS caps internal parallelism; unset or 0 means auto.
inline unsigned threads_from_env() {
  const char* raw = std::getenv("BODYMETRICS_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const unsigned long v = std::strtoul(raw, &end, 10);
  if (*end != '\0') {
    throw Error(ErrorCode::kParseError, "BODYMETRICS_THREADS must be a non-negative integer");
  }
  return static_cast<unsigned>(v);
}

struct LoadedInput {
  PipelineInput data;
  InputDescriptor descriptor;
};

inline bool is_depth_path(const std::filesystem::path& p) {
  const std::string ext = detail::lower_extension(p);
  return ext == ".pgm" || ext == ".raw";
}

inline LoadedInput load_input(const std::string& path, const std::string& intrinsics) {
  const std::string ext = detail::lower_extension(path);
  if (ext == ".ply") {
    return {read_ply(path), {path, "ply", sha256_file(path), "", ""}};
  }
  if (is_depth_path(path)) {
    if (intrinsics.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "depth input " + path + " requires --intrinsics");
    }
    return {read_depth(path, intrinsics),
            {path, "depth", sha256_file(path), intrinsics, sha256_file(intrinsics)}};
  }
  throw Error(ErrorCode::kUnsupportedFormat,
              "cannot infer input format of " + path + " (expected .ply, .pgm or .raw)");
}

struct ConvertArgs {
  std::string input;
  std::string output;
  std::string intrinsics;
  double band_lo = 0.0;
  double band_hi = 10.0;
  std::string format = "binary";
};

inline int cmd_convert(const ConvertArgs& a, std::ostream& err) {
  PointCloud cloud;
  try {
    if (detail::lower_extension(a.output) != ".ply") {
      throw Error(ErrorCode::kUnsupportedFormat, "output must be a .ply file: " + a.output);
    }
    if (is_depth_path(a.input)) {
      if (a.intrinsics.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "depth input " + a.input + " requires --intrinsics");
      }
      cloud = depth_to_cloud(read_depth(a.input, a.intrinsics), a.band_lo, a.band_hi);
    } else {
      cloud = std::get<PointCloud>(load_input(a.input, "").data);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return input_exit_code(e);
  }
  try {
    write_ply(cloud, a.output,
              a.format == "ascii" ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  err << "wrote " << cloud.size() << " points to " << a.output << '\n';
  return kExitOk;
}

/// Flag values for estimate; unset options leave the config value alone.
struct EstimateFlags {
  std::optional<double> band_lo, band_hi, ransac_thresh, sor_alpha, voxel, trim, density;
  std::optional<bool> ransac;
  std::optional<std::size_t> sor_k, n_slabs, min_slab_points;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> axis;
};

struct EstimateArgs {
  std::string input;
  std::string intrinsics;
  std::string config;
  std::string json;
  EstimateFlags flags;
};

/// defaults < config file < flags.
inline PipelineConfig effective_config(const EstimateArgs& a) {
  PipelineConfig c = a.config.empty() ? PipelineConfig{} : read_config(a.config);
  const EstimateFlags& f = a.flags;
  if (f.band_lo) c.band_lo = *f.band_lo;
  if (f.band_hi) c.band_hi = *f.band_hi;
  if (f.ransac) c.ransac = *f.ransac;
  if (f.ransac_thresh) c.ransac_thresh = *f.ransac_thresh;
  if (f.sor_k) c.sor_k = *f.sor_k;
  if (f.sor_alpha) c.sor_alpha = *f.sor_alpha;
  if (f.voxel) c.voxel = *f.voxel;
  if (f.axis) c.axis = parse_axis_mode(*f.axis);
  if (f.n_slabs) c.n_slabs = *f.n_slabs;
  if (f.min_slab_points) c.min_slab_points = *f.min_slab_points;
  if (f.trim) c.trim = *f.trim;
  if (f.density) c.density = *f.density;
  if (f.seed) c.seed = *f.seed;
  c.validate();
  return c;
}

inline std::string human_summary(const BodyEstimate& e) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << "volume " << e.volume * 1000.0 << " L ("
    << std::setprecision(4) << e.volume << " m^3), height " << std::setprecision(1)
    << e.height * 100.0 << " cm, weight " << e.weight << " kg at " << std::setprecision(0)
    << e.density_used << " kg/m^3";
  return s.str();
}

inline int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  PipelineConfig config;
  unsigned threads = 0;
  LoadedInput input;
  try {
    config = effective_config(a);
    threads = threads_from_env();
    input = load_input(a.input, a.intrinsics);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return input_exit_code(e);
  }

  PipelineLog log;
  BodyEstimate est;
  try {
    est = run_pipeline(input.data, config, &log, threads);
  } catch (const Error& e) {
    err << "pipeline error in stage '" << e.stage() << "': " << e.what() << '\n';
    return kExitPipeline;
  }

  const std::string doc = make_report(input.descriptor, config, est, log).dump(2) + "\n";
  if (a.json.empty() || a.json == "-") {
    out << doc;
  } else {
    try {
      detail::write_atomically(a.json, [&](std::ostream& o) { o << doc; });
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitIo;
    }
  }
  err << human_summary(est) << '\n';
  return kExitOk;
}

struct PhantomArgs {
  std::string shape = "humanoid";
  double height = 1.75;
  double build = 1.0;
  std::string pose = "arms-down";
  double radius = 0.1;
  double length = 0.2;
  std::vector<double> semi_axes{0.1, 0.2, 0.3};
  std::vector<double> extents{0.2, 0.4, 0.6};
  std::uint64_t seed = 0;
  std::string cloud;
  bool ascii = false;
  std::string frame = "camera";
  double density = 52000.0;
  double noise = 0.0;
  std::string depth;
  std::string intrinsics_out;
  double distance = 2.0;
  double depth_noise = 0.003;
  bool bed = false;
  std::string truth;
};

inline PhantomScene phantom_scene(const PhantomArgs& a) {
  PhantomScene scene;
  if (a.shape == "humanoid") {
    scene = make_humanoid(a.height, a.build,
                          a.pose == "arms-out" ? HumanoidPose::kArmsOut : HumanoidPose::kArmsDown);
  } else if (a.shape == "sphere") {
    scene = make_scene({Solid::ellipsoid(a.radius, a.radius, a.radius, {}, "sphere")});
  } else if (a.shape == "ellipsoid") {
    scene = make_scene({Solid::ellipsoid(a.semi_axes[0], a.semi_axes[1], a.semi_axes[2])});
  } else if (a.shape == "capsule") {
    scene = make_scene({Solid::capsule(a.radius, a.length)});
  } else {
    scene = make_scene({Solid::box(a.extents[0], a.extents[1], a.extents[2])});
  }
  if (a.bed) scene.bed = bed_under(scene);
  return scene;
}

inline nlohmann::json truth_json(const PhantomScene& scene, std::uint64_t seed) {
  return {{"schema_version", kReportSchemaVersion},
          {"volume_m3", scene.ground_truth.volume},
          {"height_m", scene.ground_truth.height},
          {"seed", seed},
          {"scene", scene_to_json(scene)}};
}

inline int cmd_phantom(const PhantomArgs& a, std::ostream& out, std::ostream& err) {
  PhantomScene scene;
  try {
    if (!a.cloud.empty() && detail::lower_extension(a.cloud) != ".ply") {
      throw Error(ErrorCode::kUnsupportedFormat, "--cloud must name a .ply file");
    }
    if (!a.depth.empty() && !is_depth_path(a.depth)) {
      throw Error(ErrorCode::kUnsupportedFormat, "--depth must name a .pgm or .raw file");
    }
    scene = phantom_scene(a);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    if (!a.cloud.empty()) {
      const SampledCloud s = sample_surface(scene, a.density, a.noise, a.seed);
      const PointCloud cloud =
          a.frame == "camera" ? to_camera(s.cloud, default_camera(scene, a.distance)) : s.cloud;
      write_ply(cloud, a.cloud, a.ascii ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian);
      err << "wrote " << cloud.size() << " points to " << a.cloud << '\n';
    }
    if (!a.depth.empty()) {
      const CameraIntrinsics intr = CameraIntrinsics::default_848x480();
      const DepthFrame frame =
          render_depth(scene, intr, default_camera(scene, a.distance), a.seed, a.depth_noise);
      std::filesystem::path kpath = a.intrinsics_out;
      if (kpath.empty()) kpath = std::filesystem::path(a.depth).replace_extension(".json");
      write_depth(frame, a.depth);
      write_intrinsics(intr, kpath);
      err << "wrote depth frame " << a.depth << " and intrinsics " << kpath.string() << '\n';
    }
    const std::string doc = truth_json(scene, a.seed).dump(2) + "\n";
    if (a.truth.empty()) {
      out << doc;
    } else {
      detail::write_atomically(a.truth, [&](std::ostream& o) { o << doc; });
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kIoError ? kExitIo : kExitUsage;
  }
  return kExitOk;
}

/// Parses argv and dispatches. Never throws; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Body volume, height and weight from depth frames and point clouds",
               "bodymetrics"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ConvertArgs conv;
  auto* convert = app.add_subcommand("convert", "Depth frame or PLY to PLY");
  convert->add_option("input", conv.input, "Input .ply, .pgm or .raw")->required();
  convert->add_option("output", conv.output, "Output .ply")->required();
  convert->add_option("--intrinsics", conv.intrinsics, "Camera intrinsics JSON for depth input")
      ->check(CLI::ExistingFile);
  convert->add_option("--band-lo", conv.band_lo, "Nearest kept depth (m)");
  convert->add_option("--band-hi", conv.band_hi, "Farthest kept depth (m)");
  convert->add_option("--format", conv.format, "PLY encoding")
      ->check(CLI::IsMember({"ascii", "binary"}));

  EstimateArgs est;
  EstimateFlags& f = est.flags;
  auto* estimate = app.add_subcommand("estimate", "Run the pipeline and report");
  estimate->add_option("input", est.input, "Input .ply, .pgm or .raw")->required();
  estimate->add_option("--intrinsics", est.intrinsics, "Camera intrinsics JSON for depth input")
      ->check(CLI::ExistingFile);
  estimate->add_option("--config", est.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  estimate->add_option("--json", est.json, "Write the report here instead of stdout");
  estimate->add_option("--band-lo", f.band_lo, "Depth band lower bound (m)");
  estimate->add_option("--band-hi", f.band_hi, "Depth band upper bound (m)");
  estimate->add_flag("--ransac,!--no-ransac", f.ransac, "Remove the dominant plane");
  estimate->add_option("--ransac-thresh", f.ransac_thresh, "Plane inlier distance (m)");
  estimate->add_option("--sor-k", f.sor_k, "Outlier removal neighbour count");
  estimate->add_option("--sor-alpha", f.sor_alpha, "Outlier removal std-dev multiplier");
  estimate->add_option("--voxel", f.voxel, "Voxel size (m), 0 disables");
  estimate->add_option("--axis", f.axis, "Body axis")->check(CLI::IsMember({"pca", "x", "y", "z"}));
  estimate->add_option("--slabs", f.n_slabs, "Slab count");
  estimate->add_option("--min-slab-points", f.min_slab_points, "Smallest slab measured");
  estimate->add_option("--trim", f.trim, "Height quantile trim fraction");
  estimate->add_option("--density", f.density, "Body density (kg/m^3)");
  estimate->add_option("--seed", f.seed, "RANSAC seed");

  PhantomArgs ph;
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic subject");
  phantom->add_option("--shape", ph.shape, "Solid to generate")
      ->check(CLI::IsMember({"humanoid", "sphere", "ellipsoid", "capsule", "box"}));
  phantom->add_option("--height", ph.height, "Humanoid height (m)");
  phantom->add_option("--build", ph.build, "Humanoid width/depth scale");
  phantom->add_option("--pose", ph.pose, "Humanoid pose")
      ->check(CLI::IsMember({"arms-down", "arms-out"}));
  phantom->add_option("--radius", ph.radius, "Sphere or capsule radius (m)");
  phantom->add_option("--length", ph.length, "Capsule cylinder length (m)");
  phantom->add_option("--semi-axes", ph.semi_axes, "Ellipsoid semi-axes a b c (m)")
      ->expected(3);
  phantom->add_option("--extents", ph.extents, "Box extents x y z (m)")->expected(3);
  phantom->add_option("--seed", ph.seed, "Sampling and noise seed");
  phantom->add_option("--cloud", ph.cloud, "Write a surface sample to this .ply");
  phantom->add_flag("--ascii", ph.ascii, "Write the cloud as ASCII PLY");
  phantom->add_option("--frame", ph.frame, "Cloud coordinates: camera (depth along +z) or world")
      ->check(CLI::IsMember({"camera", "world"}));
  phantom->add_option("--density", ph.density, "Surface samples per m^2");
  phantom->add_option("--noise", ph.noise, "Isotropic sample noise sigma (m)");
  phantom->add_option("--depth", ph.depth, "Render an 848x480 depth frame to this .pgm/.raw");
  phantom->add_option("--intrinsics-out", ph.intrinsics_out,
                      "Intrinsics JSON path (default: depth path with .json)");
  phantom->add_option("--distance", ph.distance,
                      "Camera distance for --depth and camera-frame clouds (m)");
  phantom->add_option("--depth-noise", ph.depth_noise, "Per-pixel depth noise sigma (m)");
  phantom->add_flag("--bed", ph.bed, "Add a bed plane behind the subject");
  phantom->add_option("--truth", ph.truth, "Write ground truth JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*convert) return cmd_convert(conv, err);
  if (*estimate) return cmd_estimate(est, out, err);
  return cmd_phantom(ph, out, err);
}

}  // namespace bodymetrics::cli

#endif  // BODYMETRICS_CLI_HPP_
