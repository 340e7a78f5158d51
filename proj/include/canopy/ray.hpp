// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "canopy/mesh.hpp"
#include "canopy/types.hpp"

namespace canopy {

template <typename Scalar>
struct Ray {
  Vec3<Scalar> origin;
  Vec3<Scalar> direction;  // unit length
};

using Rayd = Ray<double>;

template <typename Scalar>
struct RayHit {
  Scalar t = 0;   // distance along the ray, meters
  int face = -1;  // original face id
  Scalar u = 0, v = 0;
};

using RayHitd = RayHit<double>;

/// Minimum hit distance guarding against self-reintersection at bounce points.
inline constexpr double kRayEpsilon = 1e-6;

/// Preprocessed triangle soup for intersection queries: per face the first
/// vertex and the two edge vectors of the Moeller-Trumbore test.
template <typename Scalar>
struct TriangleGeometry {
  std::vector<Vec3<Scalar>> a, e1, e2;

  static TriangleGeometry from_mesh(const TriMesh<Scalar>& mesh) {
    TriangleGeometry g;
    g.a.reserve(mesh.faces.size());
    g.e1.reserve(mesh.faces.size());
    g.e2.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) {
      g.a.push_back(mesh.vertices[f[0]]);
      g.e1.push_back(mesh.vertices[f[1]] - mesh.vertices[f[0]]);
      g.e2.push_back(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    }
    return g;
  }

  int size() const { return static_cast<int>(a.size()); }

  Box3<Scalar> face_box(int i) const {
    Box3<Scalar> box;
    box.extend(a[i]);
    box.extend(Vec3<Scalar>(a[i] + e1[i]));
    box.extend(Vec3<Scalar>(a[i] + e2[i]));
    return box;
  }

  Vec3<Scalar> face_normal(int i) const { return e1[i].cross(e2[i]).normalized(); }

  Vec3<Scalar> vertex(int i, int corner) const {
    if (corner == 0) return a[i];
    return corner == 1 ? Vec3<Scalar>(a[i] + e1[i]) : Vec3<Scalar>(a[i] + e2[i]);
  }
};

using TriangleGeometryd = TriangleGeometry<double>;

/// Double-sided Moeller-Trumbore ray/triangle test.
///
/// `ambiguous` is set when the hit decision is numerically fragile (ray nearly
/// parallel to the plane, barycentrics within 1e-9 of an edge, or t at the
/// tmin cutoff); parity-based containment queries retry on that flag while
/// nearest-hit tracing ignores it, so both consumers stay deterministic.
template <typename Scalar>
bool intersect_triangle(const Ray<Scalar>& ray, const TriangleGeometry<Scalar>& geom, int i,
                        Scalar tmin, RayHit<Scalar>& hit, bool& ambiguous) {
  constexpr Scalar kBaryTol = Scalar(1e-9);
  ambiguous = false;

  const Vec3<Scalar> pvec = ray.direction.cross(geom.e2[i]);
  const Scalar det = geom.e1[i].dot(pvec);
  const Scalar det_floor = Scalar(1e-12) * geom.e1[i].cross(geom.e2[i]).norm();
  if (std::abs(det) <= det_floor) {
    ambiguous = true;  // grazing the plane
    return false;
  }
  const Scalar inv_det = Scalar(1) / det;
  const Vec3<Scalar> tvec = ray.origin - geom.a[i];
  const Scalar u = tvec.dot(pvec) * inv_det;
  if (u < Scalar(0) || u > Scalar(1)) {
    ambiguous = (u > -kBaryTol && u < Scalar(1) + kBaryTol);
    return false;
  }
  const Vec3<Scalar> qvec = tvec.cross(geom.e1[i]);
  const Scalar v = ray.direction.dot(qvec) * inv_det;
  if (v < Scalar(0) || u + v > Scalar(1)) {
    ambiguous = (v > -kBaryTol && u + v < Scalar(1) + kBaryTol);
    return false;
  }
  const Scalar t = geom.e2[i].dot(qvec) * inv_det;
  if (t <= tmin) {
    ambiguous = (t > tmin - Scalar(1e-9));
    return false;
  }
  ambiguous = (u < kBaryTol || v < kBaryTol || u + v > Scalar(1) - kBaryTol ||
               std::abs(det) <= Scalar(10) * det_floor);
  hit = RayHit<Scalar>{t, i, u, v};
  return true;
}

/// Lexicographic (t, face) preference; makes equal-distance ties resolve to
/// the lowest face id independently of scan order.
template <typename Scalar>
bool hit_improves(const RayHit<Scalar>& candidate, const RayHit<Scalar>& best) {
  return candidate.t < best.t || (candidate.t == best.t && candidate.face < best.face);
}

/// Reference all-faces scan; the oracle the BVH is held to.
template <typename Scalar>
std::optional<RayHit<Scalar>> brute_force_nearest(const TriangleGeometry<Scalar>& geom,
                                                  const Ray<Scalar>& ray,
                                                  Scalar tmin = Scalar(kRayEpsilon)) {
  std::optional<RayHit<Scalar>> best;
  RayHit<Scalar> hit;
  bool ambiguous = false;
  for (int i = 0; i < geom.size(); ++i) {
    if (intersect_triangle(ray, geom, i, tmin, hit, ambiguous) &&
        (!best || hit_improves(hit, *best))) {
      best = hit;
    }
  }
  return best;
}

}  // namespace canopy
