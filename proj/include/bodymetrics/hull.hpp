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

#ifndef BODYMETRICS_HULL_HPP_
#define BODYMETRICS_HULL_HPP_

// 3-d convex hull by quickhull, plus exact volume of the resulting mesh.
//
// Geometric predicates use a relative tolerance: a point counts as "above" a
// face only if its signed distance exceeds eps = 1e-9 * (bounding-box
// diagonal). Points within eps of the current hull are absorbed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bodymetrics/cloudcore.hpp"
#include "bodymetrics/ply.hpp"

namespace bodymetrics {

using Triangle = std::array<std::size_t, 3>;

/// Closed triangulated convex surface. Faces wind counter-clockwise seen from
/// outside; vertices are a subset of the input points in ascending input
/// order.
struct HullMesh {
  std::vector<Point3> vertices;
  std::vector<Triangle> faces;
};

inline constexpr double kHullRelativeEps = 1e-9;

inline double hull_tolerance(std::span<const Point3> points) {
  return points.empty() ? 0.0 : kHullRelativeEps * bounding_box(points).diagonal();
}

namespace detail::quickhull {

struct Face {
  Triangle v{};
  std::array<int, 3> nbr{-1, -1, -1};  // nbr[i] lies across edge (v[i], v[i+1])
  Vec3 normal{};
  double offset = 0.0;
  std::vector<std::size_t> outside;
  bool alive = true;
  bool visible = false;
};

class Builder {
 public:
  Builder(std::span<const Point3> pts, double eps) : pts_(pts), eps_(eps) {}

  HullMesh run(std::vector<std::size_t> candidates) {
    const std::array<std::size_t, 4> simplex = initial_simplex(candidates);
    make_tetrahedron(simplex);

    std::vector<std::size_t> rest;
    rest.reserve(candidates.size());
    for (std::size_t i : candidates) {
      if (std::find(simplex.begin(), simplex.end(), i) == simplex.end()) rest.push_back(i);
    }
    assign(rest, {0, 1, 2, 3});

    std::vector<int> pending{3, 2, 1, 0};
    while (!pending.empty()) {
      const int f = pending.back();
      pending.pop_back();
      if (!faces_[f].alive || faces_[f].outside.empty()) continue;
      add_point(f, pending);
      // A face that got new outside points stays pending via add_point.
    }
    return extract();
  }

 private:
  double dist(const Face& f, std::size_t p) const { return dot(f.normal, pts_[p]) - f.offset; }

  // True if triangle (a, b, c) has the interior point strictly below it.
  bool faces_outward(std::size_t a, std::size_t b, std::size_t c) const {
    Face f;
    f.v = {a, b, c};
    set_plane(f);
    return dot(f.normal, interior_) - f.offset < 0.0;
  }

  void set_plane(Face& f) const {
    const Point3& a = pts_[f.v[0]];
    const Point3& b = pts_[f.v[1]];
    const Point3& c = pts_[f.v[2]];
    Vec3 n = cross(b - a, c - a);
    const double len = norm(n);
    n = len > 0.0 ? n / len : Vec3{};
    f.normal = n;
    f.offset = (dot(n, a) + dot(n, b) + dot(n, c)) / 3.0;
  }

  std::array<std::size_t, 4> initial_simplex(const std::vector<std::size_t>& idx) {
    std::array<std::size_t, 6> ext{};
    for (int axis = 0; axis < 3; ++axis) {
      std::size_t lo = idx[0], hi = idx[0];
      for (std::size_t i : idx) {
        if (pts_[i][axis] < pts_[lo][axis]) lo = i;
        if (pts_[i][axis] > pts_[hi][axis]) hi = i;
      }
      ext[2 * axis] = lo;
      ext[2 * axis + 1] = hi;
    }
    std::size_t a = ext[0], b = ext[1];
    double best = -1.0;
    for (std::size_t i = 0; i < ext.size(); ++i) {
      for (std::size_t j = i + 1; j < ext.size(); ++j) {
        const double d = squared_distance(pts_[ext[i]], pts_[ext[j]]);
        if (d > best) {
          best = d;
          a = ext[i];
          b = ext[j];
        }
      }
    }
    if (!(std::sqrt(best) > eps_)) {
      throw Error(ErrorCode::kDegenerateCoincident, "all points coincide");
    }

    const Vec3 dir = (pts_[b] - pts_[a]) / std::sqrt(best);
    std::size_t c = a;
    best = -1.0;
    for (std::size_t i : idx) {
      const double d = norm(cross(pts_[i] - pts_[a], dir));
      if (d > best) {
        best = d;
        c = i;
      }
    }
    if (!(best > eps_)) throw Error(ErrorCode::kDegenerateCollinear, "all points are collinear");

    Vec3 n = cross(pts_[b] - pts_[a], pts_[c] - pts_[a]);
    n = n / norm(n);
    std::size_t d = a;
    best = -1.0;
    for (std::size_t i : idx) {
      const double h = std::abs(dot(n, pts_[i] - pts_[a]));
      if (h > best) {
        best = h;
        d = i;
      }
    }
    if (!(best > eps_)) throw Error(ErrorCode::kDegenerateCoplanar, "all points are coplanar");
    return {a, b, c, d};
  }

  void make_tetrahedron(const std::array<std::size_t, 4>& s) {
    const Point3 centroid = (pts_[s[0]] + pts_[s[1]] + pts_[s[2]] + pts_[s[3]]) / 4.0;
    interior_ = centroid;
    const std::array<Triangle, 4> tris{{{s[0], s[1], s[2]},
                                        {s[0], s[3], s[1]},
                                        {s[1], s[3], s[2]},
                                        {s[0], s[2], s[3]}}};
    for (const Triangle& t : tris) {
      Face f;
      f.v = t;
      set_plane(f);
      if (dot(f.normal, centroid) - f.offset > 0.0) {
        std::swap(f.v[1], f.v[2]);
        set_plane(f);
      }
      faces_.push_back(std::move(f));
    }
    // Neighbours by matching each directed edge with its reverse.
    std::map<std::pair<std::size_t, std::size_t>, std::pair<int, int>> edges;
    for (int fi = 0; fi < 4; ++fi) {
      for (int e = 0; e < 3; ++e) {
        edges[{faces_[fi].v[e], faces_[fi].v[(e + 1) % 3]}] = {fi, e};
      }
    }
    for (int fi = 0; fi < 4; ++fi) {
      for (int e = 0; e < 3; ++e) {
        const auto it = edges.find({faces_[fi].v[(e + 1) % 3], faces_[fi].v[e]});
        faces_[fi].nbr[e] = it->second.first;
      }
    }
  }

  // Gives each point to the first listed face it lies strictly above; points
  // above none of them are inside and dropped.
  void assign(const std::vector<std::size_t>& points, const std::vector<int>& targets) {
    for (std::size_t p : points) {
      for (int f : targets) {
        if (dist(faces_[f], p) > eps_) {
          faces_[f].outside.push_back(p);
          break;
        }
      }
    }
  }

  void add_point(int start, std::vector<int>& pending) {
    Face& sf = faces_[start];
    std::size_t eye = sf.outside.front();
    double far = dist(sf, eye);
    for (std::size_t p : sf.outside) {
      const double d = dist(sf, p);
      if (d > far || (d == far && p < eye)) {
        far = d;
        eye = p;
      }
    }

    // Visible region: faces the eye lies strictly above. A hidden face whose
    // cone triangle would fold back over the interior joins the region too.
    std::vector<int> visible{start};
    faces_[start].visible = true;
    struct HorizonEdge {
      std::size_t a, b;
      int hidden;
    };
    std::vector<HorizonEdge> horizon;
    for (std::size_t grown = 0;;) {
      for (; grown < visible.size(); ++grown) {
        for (int nb : faces_[visible[grown]].nbr) {
          Face& g = faces_[nb];
          if (!g.visible && dist(g, eye) > 0.0) {
            g.visible = true;
            visible.push_back(nb);
          }
        }
      }
      horizon.clear();
      bool folded = false;
      for (std::size_t k = 0; k < visible.size(); ++k) {
        const Face& f = faces_[visible[k]];
        for (int e = 0; e < 3; ++e) {
          const int nb = f.nbr[e];
          if (faces_[nb].visible) continue;
          const std::size_t a = f.v[e], b = f.v[(e + 1) % 3];
          if (!faces_outward(a, b, eye)) {
            faces_[nb].visible = true;
            visible.push_back(nb);
            folded = true;
          } else {
            horizon.push_back({a, b, nb});
          }
        }
      }
      if (!folded) break;
    }

    std::unordered_map<std::size_t, int> starts_at, ends_at;
    std::vector<int> created;
    created.reserve(horizon.size());
    for (const HorizonEdge& h : horizon) {
      Face f;
      f.v = {h.a, h.b, eye};
      set_plane(f);
      const int id = static_cast<int>(faces_.size());
      f.nbr[0] = h.hidden;
      Face& hidden = faces_[h.hidden];
      for (int e = 0; e < 3; ++e) {
        if (hidden.v[e] == h.b && hidden.v[(e + 1) % 3] == h.a) hidden.nbr[e] = id;
      }
      if (!starts_at.emplace(h.a, id).second || !ends_at.emplace(h.b, id).second) {
        throw std::logic_error("quickhull: horizon is not a simple cycle");
      }
      faces_.push_back(std::move(f));
      created.push_back(id);
    }
    for (int id : created) {
      Face& f = faces_[id];
      const auto next = starts_at.find(f.v[1]);
      const auto prev = ends_at.find(f.v[0]);
      if (next == starts_at.end() || prev == ends_at.end()) {
        throw std::logic_error("quickhull: horizon is not closed");
      }
      f.nbr[1] = next->second;
      f.nbr[2] = prev->second;
    }

    std::vector<std::size_t> orphans;
    for (int f : visible) {
      Face& g = faces_[f];
      g.alive = false;
      for (std::size_t p : g.outside) {
        if (p != eye) orphans.push_back(p);
      }
      g.outside.clear();
      g.outside.shrink_to_fit();
    }
    std::sort(orphans.begin(), orphans.end());
    assign(orphans, created);
    for (auto it = created.rbegin(); it != created.rend(); ++it) {
      if (!faces_[*it].outside.empty()) pending.push_back(*it);
    }
  }

  HullMesh extract() const {
    std::vector<std::size_t> used;
    for (const Face& f : faces_) {
      if (f.alive) used.insert(used.end(), f.v.begin(), f.v.end());
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    std::unordered_map<std::size_t, std::size_t> remap;
    HullMesh mesh;
    mesh.vertices.reserve(used.size());
    for (std::size_t i = 0; i < used.size(); ++i) {
      remap[used[i]] = i;
      mesh.vertices.push_back(pts_[used[i]]);
    }
    Point3 centroid{};
    for (const Point3& p : mesh.vertices) centroid = centroid + p;
    centroid = centroid / static_cast<double>(mesh.vertices.size());
    for (const Face& f : faces_) {
      if (!f.alive) continue;
      if (dot(f.normal, centroid) - f.offset > eps_) {
        throw std::logic_error("quickhull: face oriented inward");
      }
      mesh.faces.push_back({remap.at(f.v[0]), remap.at(f.v[1]), remap.at(f.v[2])});
    }
    return mesh;
  }

  std::span<const Point3> pts_;
  double eps_;
  Point3 interior_;  // initial simplex centroid; stays strictly inside
  std::vector<Face> faces_;
};

}  // namespace detail::quickhull

/// Convex hull of at least four non-coplanar points. Exact duplicates are
/// merged; degenerate inputs raise DegenerateCoincident, DegenerateCollinear or
/// DegenerateCoplanar.
inline HullMesh convex_hull(std::span<const Point3> points) {
  if (points.empty()) throw Error(ErrorCode::kDegenerateCoincident, "no points");
  const double eps = hull_tolerance(points);
  if (!(eps > 0.0)) throw Error(ErrorCode::kDegenerateCoincident, "all points coincide");

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Point3& p = points[a];
    const Point3& q = points[b];
    return std::tie(p.x, p.y, p.z) < std::tie(q.x, q.y, q.z);
  });
  std::vector<std::size_t> unique;
  unique.reserve(points.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || !(points[order[k]] == points[order[k - 1]])) unique.push_back(order[k]);
  }
  std::sort(unique.begin(), unique.end());

  return detail::quickhull::Builder(points, eps).run(std::move(unique));
}

inline HullMesh convex_hull(const PointCloud& cloud) { return convex_hull(cloud.points()); }

/// Throws InvalidMesh unless every directed edge appears once and its reverse
/// once (closed, consistently oriented 2-manifold).
inline void validate_mesh(const HullMesh& mesh) {
  if (mesh.faces.size() < 4) throw Error(ErrorCode::kInvalidMesh, "fewer than four faces");
  std::map<std::pair<std::size_t, std::size_t>, int> directed;
  for (const Triangle& t : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const std::size_t a = t[e], b = t[(e + 1) % 3];
      if (a >= mesh.vertices.size() || b >= mesh.vertices.size()) {
        throw Error(ErrorCode::kInvalidMesh, "face references a missing vertex");
      }
      if (a == b) throw Error(ErrorCode::kInvalidMesh, "face repeats a vertex");
      if (++directed[{a, b}] > 1) throw Error(ErrorCode::kInvalidMesh, "directed edge used twice");
    }
  }
  for (const auto& [edge, count] : directed) {
    if (!directed.contains({edge.second, edge.first})) {
      throw Error(ErrorCode::kInvalidMesh, "open edge without a reverse partner");
    }
  }
}

/// Enclosed volume by a signed-tetrahedron fan from the vertex centroid.
inline double hull_volume(const HullMesh& mesh) {
  validate_mesh(mesh);
  Point3 c{};
  for (const Point3& p : mesh.vertices) c = c + p;
  c = c / static_cast<double>(mesh.vertices.size());
  double six_v = 0.0;
  for (const Triangle& t : mesh.faces) {
    const Vec3 a = mesh.vertices[t[0]] - c;
    const Vec3 b = mesh.vertices[t[1]] - c;
    const Vec3 d = mesh.vertices[t[2]] - c;
    six_v += dot(a, cross(b, d));
  }
  return std::abs(six_v) / 6.0;
}

/// True iff `p` is within `eps` behind-or-on every face plane.
inline bool hull_contains(const HullMesh& mesh, const Point3& p, double eps) {
  for (const Triangle& t : mesh.faces) {
    const Point3& a = mesh.vertices[t[0]];
    const Vec3 n = cross(mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a);
    const double len = norm(n);
    if (len == 0.0) continue;
    if (dot(n, p - a) / len > eps) return false;
  }
  return true;
}

inline void write_hull_ply(const HullMesh& mesh, const std::filesystem::path& path) {
  write_ply_mesh(mesh.vertices, mesh.faces, path);
}

}  // namespace bodymetrics

#endif  // BODYMETRICS_HULL_HPP_
