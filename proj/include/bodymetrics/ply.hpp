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

#ifndef BODYMETRICS_PLY_HPP_
#define BODYMETRICS_PLY_HPP_

// PLY point clouds: ASCII 1.0 and binary_little_endian 1.0. The reader pulls
// x, y, z out of the `vertex` element and skips every other property and
// element; the writer emits float64 coordinates.

#include <array>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/file_util.hpp"

namespace bodymetrics {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

namespace detail::ply {

enum class Scalar { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

inline Scalar parse_scalar(const std::string& name) {
  if (name == "char" || name == "int8") return Scalar::kInt8;
  if (name == "uchar" || name == "uint8") return Scalar::kUInt8;
  if (name == "short" || name == "int16") return Scalar::kInt16;
  if (name == "ushort" || name == "uint16") return Scalar::kUInt16;
  if (name == "int" || name == "int32") return Scalar::kInt32;
  if (name == "uint" || name == "uint32") return Scalar::kUInt32;
  if (name == "float" || name == "float32") return Scalar::kFloat32;
  if (name == "double" || name == "float64") return Scalar::kFloat64;
  throw Error(ErrorCode::kParseError, "unknown PLY scalar type '" + name + "'");
}

inline std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::kInt8:
    case Scalar::kUInt8: return 1;
    case Scalar::kInt16:
    case Scalar::kUInt16: return 2;
    case Scalar::kInt32:
    case Scalar::kUInt32:
    case Scalar::kFloat32: return 4;
    case Scalar::kFloat64: return 8;
  }
  return 0;
}

inline double decode(Scalar s, const char* p) {
  switch (s) {
    case Scalar::kInt8: return load_le<std::int8_t>(p);
    case Scalar::kUInt8: return load_le<std::uint8_t>(p);
    case Scalar::kInt16: return load_le<std::int16_t>(p);
    case Scalar::kUInt16: return load_le<std::uint16_t>(p);
    case Scalar::kInt32: return load_le<std::int32_t>(p);
    case Scalar::kUInt32: return load_le<std::uint32_t>(p);
    case Scalar::kFloat32: return load_le<float>(p);
    case Scalar::kFloat64: return load_le<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::kFloat32;
  bool is_list = false;
  Scalar count_type = Scalar::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::kAscii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

inline std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) words.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

inline std::size_t parse_count(const std::string& word) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc() || ptr != word.data() + word.size()) {
    throw Error(ErrorCode::kParseError, "bad element count '" + word + "'");
  }
  return value;
}

inline Header parse_header(std::string_view bytes) {
  Header header;
  std::size_t pos = 0;
  bool saw_format = false;
  auto next_line = [&]() -> std::string_view {
    if (pos >= bytes.size()) {
      throw Error(ErrorCode::kParseError, "header ends before end_header");
    }
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  if (next_line() != "ply") throw Error(ErrorCode::kParseError, "missing 'ply' magic");
  for (;;) {
    const std::string_view line = next_line();
    const auto words = split_words(line);
    if (words.empty()) continue;
    const std::string& key = words[0];
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      if (words.size() != 3) throw Error(ErrorCode::kParseError, "malformed format line");
      if (words[1] == "ascii") {
        header.format = PlyFormat::kAscii;
      } else if (words[1] == "binary_little_endian") {
        header.format = PlyFormat::kBinaryLittleEndian;
      } else if (words[1] == "binary_big_endian") {
        throw Error(ErrorCode::kUnsupportedFormat, "big-endian PLY is not supported");
      } else {
        throw Error(ErrorCode::kParseError, "unknown PLY format '" + words[1] + "'");
      }
      saw_format = true;
    } else if (key == "element") {
      if (words.size() != 3) throw Error(ErrorCode::kParseError, "malformed element line");
      header.elements.push_back({words[1], parse_count(words[2]), {}});
    } else if (key == "property") {
      if (header.elements.empty()) {
        throw Error(ErrorCode::kParseError, "property declared before any element");
      }
      Property prop;
      if (words.size() == 5 && words[1] == "list") {
        prop.is_list = true;
        prop.count_type = parse_scalar(words[2]);
        prop.type = parse_scalar(words[3]);
        prop.name = words[4];
      } else if (words.size() == 3) {
        prop.type = parse_scalar(words[1]);
        prop.name = words[2];
      } else {
        throw Error(ErrorCode::kParseError, "malformed property line");
      }
      header.elements.back().properties.push_back(prop);
    } else {
      throw Error(ErrorCode::kParseError, "unexpected header keyword '" + key + "'");
    }
  }
  if (!saw_format) throw Error(ErrorCode::kParseError, "missing format line");
  header.body_offset = pos;
  return header;
}

class AsciiCursor {
 public:
  explicit AsciiCursor(std::string_view body) : body_(body) {}

  double next() {
    while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
    if (pos_ >= body_.size()) {
      throw Error(ErrorCode::kParseError, "truncated ASCII body");
    }
    const char* first = body_.data() + pos_;
    const char* last = body_.data() + body_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || (ptr != last && !std::isspace(static_cast<unsigned char>(*ptr)))) {
      throw Error(ErrorCode::kParseError, "bad number in ASCII body");
    }
    pos_ = static_cast<std::size_t>(ptr - body_.data());
    return value;
  }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
};

class BinaryCursor {
 public:
  explicit BinaryCursor(std::string_view body) : body_(body) {}

  double next(Scalar s) {
    const std::size_t n = scalar_size(s);
    if (pos_ + n > body_.size()) {
      throw Error(ErrorCode::kParseError, "truncated binary body");
    }
    const double v = decode(s, body_.data() + pos_);
    pos_ += n;
    return v;
  }

  void skip(std::size_t n) {
    if (pos_ + n > body_.size()) {
      throw Error(ErrorCode::kParseError, "truncated binary body");
    }
    pos_ += n;
  }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
};

inline std::size_t list_length(double raw) {
  if (!(raw >= 0.0) || raw != static_cast<double>(static_cast<std::size_t>(raw))) {
    throw Error(ErrorCode::kParseError, "invalid list length");
  }
  return static_cast<std::size_t>(raw);
}

}  // namespace detail::ply

/// Reads the vertex positions of an ASCII or little-endian binary PLY file.
inline PointCloud read_ply(const std::filesystem::path& path) {
  using namespace detail::ply;
  const std::string bytes = detail::read_file_bytes(path);
  const Header header = parse_header(bytes);

  const Element* vertex = nullptr;
  for (const Element& e : header.elements) {
    if (e.name == "vertex") vertex = &e;
  }
  if (vertex == nullptr) throw Error(ErrorCode::kParseError, "no vertex element");
  std::array<int, 3> slot{-1, -1, -1};
  for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
    const Property& p = vertex->properties[i];
    const int axis = p.name == "x" ? 0 : p.name == "y" ? 1 : p.name == "z" ? 2 : -1;
    if (axis >= 0 && !p.is_list) slot[axis] = static_cast<int>(i);
  }
  for (int axis = 0; axis < 3; ++axis) {
    if (slot[axis] < 0) {
      throw Error(ErrorCode::kParseError,
                  std::string("vertex element lacks property ") + "xyz"[axis]);
    }
  }

  const std::string_view body = std::string_view(bytes).substr(header.body_offset);
  std::vector<Point3> points;
  points.reserve(vertex->count);
  std::vector<double> values;

  auto read_elements = [&](auto&& next_scalar, auto&& skip_list) {
    for (const Element& element : header.elements) {
      const bool is_vertex = &element == vertex;
      values.assign(element.properties.size(), 0.0);
      for (std::size_t row = 0; row < element.count; ++row) {
        for (std::size_t i = 0; i < element.properties.size(); ++i) {
          const Property& prop = element.properties[i];
          if (prop.is_list) {
            skip_list(prop);
          } else {
            values[i] = next_scalar(prop.type);
          }
        }
        if (is_vertex) {
          const Point3 p{values[slot[0]], values[slot[1]], values[slot[2]]};
          if (!p.is_finite()) {
            throw Error(ErrorCode::kParseError,
                        "vertex " + std::to_string(row) + " is not finite");
          }
          points.push_back(p);
        }
      }
      if (is_vertex) break;  // later elements cannot affect vertices
    }
  };

  if (header.format == PlyFormat::kAscii) {
    AsciiCursor cursor(body);
    read_elements([&](Scalar) { return cursor.next(); },
                  [&](const Property&) {
                    const std::size_t n = list_length(cursor.next());
                    for (std::size_t k = 0; k < n; ++k) cursor.next();
                  });
  } else {
    BinaryCursor cursor(body);
    read_elements([&](Scalar s) { return cursor.next(s); },
                  [&](const Property& prop) {
                    const std::size_t n = list_length(cursor.next(prop.count_type));
                    cursor.skip(n * scalar_size(prop.type));
                  });
  }
  return PointCloud(std::move(points));
}

namespace detail::ply {

inline void write_vertex_header(std::ostream& out, PlyFormat format,
                                std::size_t count) {
  out << "ply\n"
      << (format == PlyFormat::kAscii ? "format ascii 1.0\n"
                                      : "format binary_little_endian 1.0\n")
      << "comment bodymetrics\n"
      << "element vertex " << count << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
}

}  // namespace detail::ply

/// Writes float64 x, y, z. ASCII output uses round-trip precision.
inline void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
                      PlyFormat format = PlyFormat::kBinaryLittleEndian) {
  detail::write_atomically(path, [&](std::ostream& out) {
    detail::ply::write_vertex_header(out, format, cloud.size());
    out << "end_header\n";
    if (format == PlyFormat::kAscii) {
      out << std::setprecision(std::numeric_limits<double>::max_digits10);
      for (const Point3& p : cloud) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
    } else {
      for (const Point3& p : cloud) {
        detail::store_le(out, p.x);
        detail::store_le(out, p.y);
        detail::store_le(out, p.z);
      }
    }
  });
}

/// ASCII triangle mesh (vertex + face elements), for inspecting hulls.
inline void write_ply_mesh(std::span<const Point3> vertices,
                           std::span<const std::array<std::size_t, 3>> faces,
                           const std::filesystem::path& path) {
  detail::write_atomically(path, [&](std::ostream& out) {
    detail::ply::write_vertex_header(out, PlyFormat::kAscii, vertices.size());
    out << "element face " << faces.size() << "\n"
        << "property list uchar int vertex_indices\n"
        << "end_header\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const Point3& p : vertices) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
    for (const auto& f : faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  });
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_PLY_HPP_
