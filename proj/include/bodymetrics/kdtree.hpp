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

#ifndef BODYMETRICS_KDTREE_HPP_
#define BODYMETRICS_KDTREE_HPP_

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <queue>
#include <vector>

#include "bodymetrics/cloudcore.hpp"

namespace bodymetrics {

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = 0.0;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    if (a.squared_distance != b.squared_distance) {
      return a.squared_distance < b.squared_distance;
    }
    return a.index < b.index;
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Balanced 3-d tree over a copy of the cloud. Neighbours are ordered by
/// distance, ties by point index, so results match a brute-force scan exactly.
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud)
      : points_(cloud.begin(), cloud.end()), order_(points_.size()),
        axis_(points_.size(), 0) {
    if (points_.empty()) {
      throw Error(ErrorCode::kEmptyCloud, "cannot index an empty cloud");
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    build(0, order_.size());
  }

  std::size_t size() const { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  /// The k nearest points to `query`, closest first (fewer if the tree is
  /// smaller than k).
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const {
    std::vector<Neighbor> heap;
    if (k == 0) return heap;
    heap.reserve(k + 1);
    search(0, order_.size(), query, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  void build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= kLeafSize) return;
    Point3 mn = points_[order_[lo]], mx = mn;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const Point3& p = points_[order_[i]];
      mn = {std::min(mn.x, p.x), std::min(mn.y, p.y), std::min(mn.z, p.z)};
      mx = {std::max(mx.x, p.x), std::max(mx.y, p.y), std::max(mx.z, p.z)};
    }
    const Vec3 spread = mx - mn;
    unsigned char axis = 0;
    if (spread.y > spread[axis]) axis = 1;
    if (spread.z > spread[axis]) axis = 2;

    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                       const double ca = points_[a][axis], cb = points_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    axis_[mid] = axis;
    build(lo, mid);
    build(mid + 1, hi);
  }

  void offer(std::size_t idx, const Point3& query, std::size_t k,
             std::vector<Neighbor>& heap) const {
    const Neighbor cand{idx, squared_distance(points_[idx], query)};
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end());
    } else if (cand < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end());
    }
  }

  void search(std::size_t lo, std::size_t hi, const Point3& query, std::size_t k,
              std::vector<Neighbor>& heap) const {
    if (hi - lo <= kLeafSize) {
      for (std::size_t i = lo; i < hi; ++i) offer(order_[i], query, k, heap);
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t pivot = order_[mid];
    const unsigned char axis = axis_[mid];
    const double diff = query[axis] - points_[pivot][axis];
    offer(pivot, query, k, heap);
    const bool left_first = diff <= 0.0;
    if (left_first) {
      search(lo, mid, query, k, heap);
    } else {
      search(mid + 1, hi, query, k, heap);
    }
    // `<=` keeps equal-distance candidates reachable for the index tie-break.
    if (heap.size() < k || diff * diff <= heap.front().squared_distance) {
      if (left_first) {
        search(mid + 1, hi, query, k, heap);
      } else {
        search(lo, mid, query, k, heap);
      }
    }
  }

  std::vector<Point3> points_;
  std::vector<std::size_t> order_;
  std::vector<unsigned char> axis_;
};

inline KdTree build_kdtree(const PointCloud& cloud) { return KdTree(cloud); }

}  // namespace bodymetrics

#endif  // BODYMETRICS_KDTREE_HPP_
