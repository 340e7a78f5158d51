// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "canopy/ray.hpp"

namespace canopy {

/// Binary BVH over a TriangleGeometry; median split on the widest centroid
/// axis, at most 4 triangles per leaf. Queries return exactly what the brute
/// force scan would, including the (t, face-id) tie rule.
template <typename Scalar>
class Bvh {
 public:
  Bvh() = default;

  explicit Bvh(TriangleGeometry<Scalar> geometry) : geom_(std::move(geometry)) {
    const int n = geom_.size();
    if (n == 0) return;
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<Vec3<Scalar>> centroids(n);
    std::vector<Box3<Scalar>> boxes(n);
    for (int i = 0; i < n; ++i) {
      boxes[i] = geom_.face_box(i);
      centroids[i] = boxes[i].center();
    }
    nodes_.reserve(2 * n);
    build(0, n, centroids, boxes);
  }

  const TriangleGeometry<Scalar>& geometry() const { return geom_; }
  bool empty() const { return nodes_.empty(); }

  std::optional<RayHit<Scalar>> nearest_hit(const Ray<Scalar>& ray,
                                            Scalar tmin = Scalar(kRayEpsilon)) const {
    std::optional<RayHit<Scalar>> best;
    if (nodes_.empty()) return best;
    int stack[kMaxDepth * 2];
    int top = 0;
    stack[top++] = 0;
    RayHit<Scalar> hit;
    bool ambiguous = false;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      const Scalar limit = best ? best->t : std::numeric_limits<Scalar>::infinity();
      Scalar t_near;
      if (!box_hit(node.box, ray, tmin, limit, t_near)) continue;
      if (node.is_leaf()) {
        for (int k = node.first; k < node.first + node.count; ++k) {
          if (intersect_triangle(ray, geom_, order_[k], tmin, hit, ambiguous) &&
              (!best || hit_improves(hit, *best))) {
            best = hit;
          }
        }
      } else {
        // visit the nearer child last so it is popped first
        Scalar tl, tr;
        const bool hl = box_hit(nodes_[node.left].box, ray, tmin, limit, tl);
        const bool hr = box_hit(nodes_[node.right].box, ray, tmin, limit, tr);
        if (hl && hr) {
          if (tl < tr) {
            stack[top++] = node.right;
            stack[top++] = node.left;
          } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
          }
        } else if (hl) {
          stack[top++] = node.left;
        } else if (hr) {
          stack[top++] = node.right;
        }
      }
    }
    return best;
  }

  /// Invoke f(hit) for every triangle hit with t in (tmin, tmax). When
  /// any_ambiguous is given it is set if any tested triangle produced a
  /// numerically fragile decision (hit or near miss), which parity-based
  /// containment uses as its retry signal.
  template <typename F>
  void for_each_hit(const Ray<Scalar>& ray, Scalar tmin, Scalar tmax, F&& f,
                    bool* any_ambiguous = nullptr) const {
    if (nodes_.empty()) return;
    int stack[kMaxDepth * 2];
    int top = 0;
    stack[top++] = 0;
    RayHit<Scalar> hit;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      Scalar t_near;
      if (!box_hit(node.box, ray, tmin, tmax, t_near)) continue;
      if (node.is_leaf()) {
        for (int k = node.first; k < node.first + node.count; ++k) {
          bool ambiguous = false;
          const bool is_hit = intersect_triangle(ray, geom_, order_[k], tmin, hit, ambiguous);
          if (any_ambiguous && ambiguous) *any_ambiguous = true;
          if (is_hit && hit.t < tmax) f(hit);
        }
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
  }

  /// True if any triangle intersects the open interval (tmin, tmax).
  bool segment_blocked(const Ray<Scalar>& ray, Scalar tmin, Scalar tmax) const {
    bool blocked = false;
    for_each_hit(ray, tmin, tmax, [&](const RayHit<Scalar>&) { blocked = true; });
    return blocked;
  }

 private:
  static constexpr int kMaxDepth = 64;
  static constexpr int kLeafSize = 4;

  struct Node {
    Box3<Scalar> box;
    int left = -1, right = -1;
    int first = 0, count = 0;
    bool is_leaf() const { return count > 0; }
  };

  int build(int begin, int end, const std::vector<Vec3<Scalar>>& centroids,
            const std::vector<Box3<Scalar>>& boxes) {
    const int node_index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Box3<Scalar> box, centroid_box;
    for (int k = begin; k < end; ++k) {
      box.extend(boxes[order_[k]]);
      centroid_box.extend(centroids[order_[k]]);
    }
    nodes_[node_index].box = box;

    const int count = end - begin;
    if (count <= kLeafSize) {
      nodes_[node_index].first = begin;
      nodes_[node_index].count = count;
      return node_index;
    }
    int axis;
    centroid_box.sizes().maxCoeff(&axis);
    const int mid = begin + count / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int lhs, int rhs) {
                       const Scalar cl = centroids[lhs][axis];
                       const Scalar cr = centroids[rhs][axis];
                       return cl < cr || (cl == cr && lhs < rhs);
                     });
    const int left = build(begin, mid, centroids, boxes);
    const int right = build(mid, end, centroids, boxes);
    nodes_[node_index].left = left;
    nodes_[node_index].right = right;
    return node_index;
  }

  static bool box_hit(const Box3<Scalar>& box, const Ray<Scalar>& ray, Scalar tmin, Scalar tmax,
                      Scalar& t_near) {
    Scalar t0 = tmin;
    Scalar t1 = tmax;
    for (int axis = 0; axis < 3; ++axis) {
      const Scalar o = ray.origin[axis];
      const Scalar d = ray.direction[axis];
      const Scalar lo = box.min()[axis];
      const Scalar hi = box.max()[axis];
      if (std::abs(d) < std::numeric_limits<Scalar>::min()) {
        if (o < lo || o > hi) return false;
        continue;
      }
      const Scalar inv = Scalar(1) / d;
      Scalar ta = (lo - o) * inv;
      Scalar tb = (hi - o) * inv;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
    t_near = t0;
    return true;
  }

  TriangleGeometry<Scalar> geom_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

using Bvhd = Bvh<double>;

}  // namespace canopy
