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


#ifndef BODYMETRICS_REPORT_HPP_
#define BODYMETRICS_REPORT_HPP_

// JSON forms of PipelineConfig and of the estimate report. Hashing uses
// OpenSSL, so users of this header link libcrypto.

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bodymetrics/error.hpp"
#include "bodymetrics/file_util.hpp"
#include "bodymetrics/metrics.hpp"
#include "bodymetrics/pipeline.hpp"

namespace bodymetrics {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kToolName = "bodymetrics";
inline constexpr std::string_view kToolVersion = "0.1.0";

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(detail::read_file_bytes(path));
}

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  return {{"band_lo", c.band_lo},
          {"band_hi", c.band_hi},
          {"ransac", c.ransac},
          {"ransac_thresh", c.ransac_thresh},
          {"ransac_iterations", c.ransac_iterations},
          {"seed", c.seed},
          {"sor_k", c.sor_k},
          {"sor_alpha", c.sor_alpha},
          {"voxel", c.voxel},
          {"axis", std::string(to_string(c.axis))},
          {"n_slabs", c.n_slabs},
          {"min_slab_points", c.min_slab_points},
          {"trim", c.trim},
          {"density", c.density},
          {"completion", std::string(to_string(c.completion))},
          {"mirror_quantile", c.mirror_quantile}};
}

inline AxisMode parse_axis_mode(const std::string& s) {
  if (s == "pca") return AxisMode::kPca;
  if (s == "x") return AxisMode::kX;
  if (s == "y") return AxisMode::kY;
  if (s == "z") return AxisMode::kZ;
  throw Error(ErrorCode::kParseError, "axis must be one of pca, x, y, z (got '" + s + "')");
}

inline Completion parse_completion(const std::string& s) {
  if (s == "auto") return Completion::kAuto;
  if (s == "none") return Completion::kNone;
  if (s == "mirror") return Completion::kMirror;
  throw Error(ErrorCode::kParseError,
              "completion must be one of auto, none, mirror (got '" + s + "')");
}

namespace detail {

inline std::size_t json_count(const nlohmann::json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer()) {
    throw Error(ErrorCode::kParameterOutOfRange, key + " must be a non-negative integer");
  }
  throw Error(ErrorCode::kParseError, key + " must be an integer");
}

inline double json_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw Error(ErrorCode::kParseError, key + " must be a number");
  return v.get<double>();
}

}  // namespace detail

/// Overlays the keys of `doc` on `base`. Unknown keys and wrongly typed
/// values are rejected; ranges are left to PipelineConfig::validate.
inline PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig base = {}) {
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "config must be a JSON object");
  PipelineConfig c = base;
  for (const auto& [key, v] : doc.items()) {
    if (key == "band_lo") c.band_lo = detail::json_number(v, key);
    else if (key == "band_hi") c.band_hi = detail::json_number(v, key);
    else if (key == "ransac") {
      if (!v.is_boolean()) throw Error(ErrorCode::kParseError, "ransac must be a boolean");
      c.ransac = v.get<bool>();
    }
    else if (key == "ransac_thresh") c.ransac_thresh = detail::json_number(v, key);
    else if (key == "ransac_iterations") c.ransac_iterations = detail::json_count(v, key);
    else if (key == "seed") c.seed = detail::json_count(v, key);
    else if (key == "sor_k") c.sor_k = detail::json_count(v, key);
    else if (key == "sor_alpha") c.sor_alpha = detail::json_number(v, key);
    else if (key == "voxel") c.voxel = detail::json_number(v, key);
    else if (key == "axis") {
      if (!v.is_string()) throw Error(ErrorCode::kParseError, "axis must be a string");
      c.axis = parse_axis_mode(v.get<std::string>());
    }
    else if (key == "n_slabs") c.n_slabs = detail::json_count(v, key);
    else if (key == "min_slab_points") c.min_slab_points = detail::json_count(v, key);
    else if (key == "trim") c.trim = detail::json_number(v, key);
    else if (key == "density") c.density = detail::json_number(v, key);
    else if (key == "completion") {
      if (!v.is_string()) throw Error(ErrorCode::kParseError, "completion must be a string");
      c.completion = parse_completion(v.get<std::string>());
    }
    else if (key == "mirror_quantile") c.mirror_quantile = detail::json_number(v, key);
    else throw Error(ErrorCode::kParseError, "unknown config key '" + key + "'");
  }
  return c;
}

inline PipelineConfig read_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  const std::string bytes = detail::read_file_bytes(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return config_from_json(doc, base);
}

inline nlohmann::json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }

inline nlohmann::json estimate_to_json(const BodyEstimate& e) {
  const VolumeReport& r = e.volume_report;
  return {{"volume_m3", e.volume},
          {"height_m", e.height},
          {"weight_kg", e.weight},
          {"density_kg_m3", e.density_used},
          {"axis", vec_json(e.axis_used.vec())},
          {"volume_report",
           {{"total_volume_m3", r.total_volume},
            {"slab_volumes_m3", r.slab_volumes},
            {"skipped_slabs", r.skipped_slabs},
            {"slab_count", r.slab_count}}}};
}

/// What was measured: the path as given, its kind and content hashes.
struct InputDescriptor {
  std::string path;
  std::string kind;  // "ply" or "depth"
  std::string sha256;
  std::string intrinsics_path;
  std::string intrinsics_sha256;
};

inline nlohmann::json make_report(const InputDescriptor& input, const PipelineConfig& config,
                                  const BodyEstimate& estimate, const PipelineLog& log) {
  nlohmann::json in{{"path", input.path}, {"kind", input.kind}, {"sha256", input.sha256}};
  if (!input.intrinsics_path.empty()) {
    in["intrinsics"] = {{"path", input.intrinsics_path}, {"sha256", input.intrinsics_sha256}};
  }
  nlohmann::json stages = nlohmann::json::array();
  for (const StageRecord& s : log) {
    stages.push_back({{"name", s.name},
                      {"points_in", s.points_in},
                      {"points_out", s.points_out},
                      {"duration_ms", s.duration_ms}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"tool", {{"name", std::string(kToolName)}, {"version", std::string(kToolVersion)}}},
          {"input", in},
          {"config", config_to_json(config)},
          {"estimate", estimate_to_json(estimate)},
          {"stages", stages}};
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_REPORT_HPP_
