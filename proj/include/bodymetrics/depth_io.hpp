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

#ifndef BODYMETRICS_DEPTH_IO_HPP_
#define BODYMETRICS_DEPTH_IO_HPP_

// Depth frames (16-bit PGM or raw little-endian u16), label masks (8-bit PGM)
// and the intrinsics JSON document:
//   {"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..,"depth_scale":..}

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/file_util.hpp"

namespace bodymetrics {

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParseError, "intrinsics document must be a JSON object");
  }
  auto number = [&](const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
      throw Error(ErrorCode::kParseError, std::string("intrinsics missing field '") + key + "'");
    }
    if (!it->is_number()) {
      throw Error(ErrorCode::kParseError, std::string("intrinsics field '") + key + "' is not numeric");
    }
    return it->get<double>();
  };
  auto integer = [&](const char* key) {
    const double v = number(key);
    if (v != static_cast<double>(static_cast<int>(v))) {
      throw Error(ErrorCode::kParseError, std::string("intrinsics field '") + key + "' must be an integer");
    }
    return static_cast<int>(v);
  };
  CameraIntrinsics k;
  k.fx = number("fx");
  k.fy = number("fy");
  k.cx = number("cx");
  k.cy = number("cy");
  k.width = integer("width");
  k.height = integer("height");
  k.depth_scale = number("depth_scale");
  k.validate();
  return k;
}

inline nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
          {"width", k.width}, {"height", k.height}, {"depth_scale", k.depth_scale}};
}

inline CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  const std::string text = detail::read_file_bytes(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return intrinsics_from_json(doc);
}

inline void write_intrinsics(const CameraIntrinsics& k, const std::filesystem::path& path) {
  detail::write_atomically(path, [&](std::ostream& out) {
    out << intrinsics_to_json(k).dump(2) << '\n';
  });
}

namespace detail::pgm {

struct Image {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::string_view pixels;
};

inline Image parse(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      return;
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    long value = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000'000L) throw Error(ErrorCode::kParseError, "PGM value overflow");
      ++pos;
    }
    if (pos == start) throw Error(ErrorCode::kParseError, std::string("PGM header missing ") + what);
    return static_cast<int>(value);
  };

  if (bytes.substr(0, 2) != "P5") throw Error(ErrorCode::kParseError, "not a binary PGM (P5)");
  pos = 2;
  Image img;
  img.width = read_int("width");
  img.height = read_int("height");
  img.maxval = read_int("maxval");
  if (img.width <= 0 || img.height <= 0) throw Error(ErrorCode::kParseError, "PGM dimensions must be positive");
  if (img.maxval <= 0 || img.maxval > 65535) throw Error(ErrorCode::kParseError, "PGM maxval out of range");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::kParseError, "PGM header not terminated");
  }
  ++pos;
  const std::size_t bytes_per_sample = img.maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(img.width) * img.height * bytes_per_sample;
  if (bytes.size() - pos < need) throw Error(ErrorCode::kParseError, "truncated PGM raster");
  img.pixels = bytes.substr(pos, need);
  return img;
}

inline void write_header(std::ostream& out, int width, int height, int maxval) {
  out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
}

}  // namespace detail::pgm

/// Reads a depth frame. `.raw` files are headerless little-endian u16 sized by
/// the intrinsics; anything else must be a 16-bit P5 PGM.
inline DepthFrame read_depth(const std::filesystem::path& path,
                             const std::filesystem::path& intrinsics_path) {
  const CameraIntrinsics k = read_intrinsics(intrinsics_path);
  const std::string bytes = detail::read_file_bytes(path);
  DepthFrame frame;
  frame.intrinsics = k;
  if (detail::lower_extension(path) == ".raw") {
    const std::size_t expected = static_cast<std::size_t>(k.width) * k.height * 2;
    if (bytes.size() != expected) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "raw depth holds " + std::to_string(bytes.size()) + " bytes, intrinsics imply " +
                      std::to_string(expected));
    }
    frame.width = k.width;
    frame.height = k.height;
    frame.data.resize(static_cast<std::size_t>(k.width) * k.height);
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
      frame.data[i] = detail::load_le<std::uint16_t>(bytes.data() + 2 * i);
    }
    return frame;
  }

  const auto img = detail::pgm::parse(bytes);
  if (img.maxval <= 255) throw Error(ErrorCode::kParseError, "depth PGM must be 16-bit (maxval > 255)");
  if (img.width != k.width || img.height != k.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "depth is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                    ", intrinsics say " + std::to_string(k.width) + "x" + std::to_string(k.height));
  }
  frame.width = img.width;
  frame.height = img.height;
  frame.data.resize(static_cast<std::size_t>(img.width) * img.height);
  const auto* p = reinterpret_cast<const unsigned char*>(img.pixels.data());
  for (std::size_t i = 0; i < frame.data.size(); ++i) {
    frame.data[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);  // PGM is big-endian
  }
  return frame;
}

/// Writes the raster only (intrinsics go through write_intrinsics).
inline void write_depth(const DepthFrame& frame, const std::filesystem::path& path) {
  frame.validate();
  const bool raw = detail::lower_extension(path) == ".raw";
  detail::write_atomically(path, [&](std::ostream& out) {
    if (raw) {
      for (std::uint16_t d : frame.data) detail::store_le(out, d);
      return;
    }
    detail::pgm::write_header(out, frame.width, frame.height, 65535);
    for (std::uint16_t d : frame.data) {
      const char b[2] = {static_cast<char>(d >> 8), static_cast<char>(d & 0xff)};
      out.write(b, 2);
    }
  });
}

inline LabelMask read_mask(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const auto img = detail::pgm::parse(bytes);
  if (img.maxval > 255) throw Error(ErrorCode::kParseError, "label mask PGM must be 8-bit");
  LabelMask mask{img.width, img.height, {}};
  mask.labels.assign(img.pixels.begin(), img.pixels.end());
  return mask;
}

inline void write_mask(const LabelMask& mask, const std::filesystem::path& path) {
  if (mask.labels.size() != static_cast<std::size_t>(mask.width) * mask.height) {
    throw Error(ErrorCode::kDimensionMismatch, "label count does not match mask dimensions");
  }
  detail::write_atomically(path, [&](std::ostream& out) {
    detail::pgm::write_header(out, mask.width, mask.height, 255);
    out.write(reinterpret_cast<const char*>(mask.labels.data()),
              static_cast<std::streamsize>(mask.labels.size()));
  });
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_DEPTH_IO_HPP_
