// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "canopy/bvh.hpp"
#include "canopy/envelope.hpp"
#include "canopy/mesh.hpp"
#include "canopy/rng.hpp"

namespace canopy {

/// Equilateral scatterer triangle in its centroid-centered local frame.
template <typename Scalar>
struct TrianglePrototype {
  Scalar area = 0;
  Scalar side = 0;
  std::array<Vec3<Scalar>, 3> local_vertices;
};

/// Local-frame prototype for a given area A: side l = sqrt(4A/sqrt(3)) and
/// vertices p1 = (0, -l/sqrt(3), 0), p2 = (l/2, l/(2 sqrt(3)), 0),
/// p3 = (-l/2, l/(2 sqrt(3)), 0).
template <typename Scalar>
TrianglePrototype<Scalar> triangle_prototype(Scalar area) {
  if (!(area > Scalar(0))) throw std::invalid_argument("triangle_prototype: area must be > 0");
  const Scalar root3 = std::sqrt(Scalar(3));
  const Scalar l = std::sqrt(Scalar(4) * area / root3);
  TrianglePrototype<Scalar> proto;
  proto.area = area;
  proto.side = l;
  proto.local_vertices = {
      Vec3<Scalar>(0, -l / root3, 0),
      Vec3<Scalar>(l / Scalar(2), l / (Scalar(2) * root3), 0),
      Vec3<Scalar>(-l / Scalar(2), l / (Scalar(2) * root3), 0),
  };
  return proto;
}

/// Rotation drawn uniformly from SO(3) (uniform unit quaternion method).
template <typename Scalar = double>
Mat3<Scalar> random_rotation(RandomStream& rng) {
  const double u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  const double u3 = rng.uniform01();
  const double two_pi = 2.0 * std::numbers::pi;
  const double r1 = std::sqrt(1.0 - u1);
  const double r2 = std::sqrt(u1);
  const Eigen::Quaternion<Scalar> q(static_cast<Scalar>(r2 * std::cos(two_pi * u3)),
                                    static_cast<Scalar>(r1 * std::sin(two_pi * u2)),
                                    static_cast<Scalar>(r1 * std::cos(two_pi * u2)),
                                    static_cast<Scalar>(r2 * std::sin(two_pi * u3)));
  return q.normalized().toRotationMatrix();
}

/// Uniform sampling inside a watertight envelope: rejection from the AABB
/// with ray-parity containment. The parity ray direction is randomized per
/// query and the query is retried (eventually from a nudged origin) whenever
/// the crossing count is numerically fragile.
template <typename Scalar>
class PointInMeshSampler {
 public:
  explicit PointInMeshSampler(const TriMesh<Scalar>& envelope)
      : bvh_(TriangleGeometry<Scalar>::from_mesh(envelope)), box_(bounding_box(envelope)) {
    const auto topo = edge_topology(envelope);
    if (!topo.watertight) {
      throw std::runtime_error("PointInMeshSampler: envelope is not watertight (" +
                               std::to_string(topo.defective_edges) + " defective edges)");
    }
  }

  const Box3<Scalar>& bounds() const { return box_; }

  bool contains(const Vec3<Scalar>& point, RandomStream& rng) const {
    const Scalar nudge = Scalar(1e-9);
    Vec3<Scalar> origin = point;
    for (int attempt = 0; attempt < 64; ++attempt) {
      const Vec3<Scalar> dir = rng.unit_vector().template cast<Scalar>();
      bool ambiguous = false;
      int crossings = 0;
      bvh_.for_each_hit(
          Ray<Scalar>{origin, dir}, Scalar(0), std::numeric_limits<Scalar>::infinity(),
          [&](const RayHit<Scalar>&) { ++crossings; }, &ambiguous);
      if (!ambiguous) return (crossings % 2) == 1;
      if (attempt >= 8) origin = point + nudge * rng.unit_vector().template cast<Scalar>();
    }
    throw std::runtime_error("PointInMeshSampler: containment query failed to stabilize");
  }

  Vec3<Scalar> sample(RandomStream& rng) const {
    const Vec3<Scalar> lo = box_.min();
    const Vec3<Scalar> extent = box_.sizes();
    for (long rejected = 0; rejected <= kRejectionBudget; ++rejected) {
      Vec3<Scalar> p;
      for (int axis = 0; axis < 3; ++axis) {
        p[axis] = lo[axis] + extent[axis] * static_cast<Scalar>(rng.uniform01());
      }
      if (contains(p, rng)) return p;
    }
    throw std::runtime_error(
        "PointInMeshSampler: rejection budget exhausted, envelope volume is degenerate");
  }

 private:
  static constexpr long kRejectionBudget = 1'000'000;

  Bvh<Scalar> bvh_;
  Box3<Scalar> box_;
};

/// One-shot uniform point in a watertight envelope.
template <typename Scalar>
Vec3<Scalar> sample_point_in_mesh(const TriMesh<Scalar>& envelope, RandomStream& rng) {
  return PointInMeshSampler<Scalar>(envelope).sample(rng);
}

/// Monte-Carlo volume through the rejection-sampling identity:
/// acceptance rate times AABB volume. Independent cross-check of the
/// signed-tetrahedra mesh_volume.
template <typename Scalar>
Scalar mc_volume_estimate(const TriMesh<Scalar>& envelope, long n_proposals, RandomStream& rng) {
  if (n_proposals <= 0) throw std::invalid_argument("mc_volume_estimate: n_proposals must be > 0");
  const PointInMeshSampler<Scalar> sampler(envelope);
  const Vec3<Scalar> lo = sampler.bounds().min();
  const Vec3<Scalar> extent = sampler.bounds().sizes();
  long accepted = 0;
  for (long k = 0; k < n_proposals; ++k) {
    Vec3<Scalar> p;
    for (int axis = 0; axis < 3; ++axis) {
      p[axis] = lo[axis] + extent[axis] * static_cast<Scalar>(rng.uniform01());
    }
    if (sampler.contains(p, rng)) ++accepted;
  }
  return static_cast<Scalar>(accepted) / static_cast<Scalar>(n_proposals) *
         extent.prod();
}

/// The scatterer population a crown presents to the ray tracer: an open
/// triangle soup plus the sampled placement centroids.
template <typename Scalar>
struct ScattererSoup {
  TriMesh<Scalar> mesh;
  std::vector<Vec3<Scalar>> centroids;

  long count() const { return static_cast<long>(mesh.faces.size()); }
};

using ScattererSoupd = ScattererSoup<double>;

/// Populate the envelope with Q = floor(rho * v_target) congruent equilateral
/// triangles; per triangle the centroid is uniform in the envelope and the
/// orientation uniform on SO(3), vertices s_j = c + R p_j. Draw order per
/// triangle is fixed (centroid first, then rotation) for reproducibility.
template <typename Scalar>
ScattererSoup<Scalar> fill(const TriMesh<Scalar>& envelope, const FoliageParams& params,
                           RandomStream& rng) {
  params.validate();
  const long q = static_cast<long>(std::floor(params.rho * params.v_target));
  const auto proto = triangle_prototype(static_cast<Scalar>(params.area));

  ScattererSoup<Scalar> soup;
  if (q == 0) return soup;

  const PointInMeshSampler<Scalar> sampler(envelope);
  soup.mesh.vertices.reserve(3 * q);
  soup.mesh.faces.reserve(q);
  soup.centroids.reserve(q);
  for (long i = 0; i < q; ++i) {
    const Vec3<Scalar> c = sampler.sample(rng);
    const Mat3<Scalar> rot = random_rotation<Scalar>(rng);
    const int base = soup.mesh.vertex_count();
    for (int j = 0; j < 3; ++j) {
      soup.mesh.vertices.push_back(c + rot * proto.local_vertices[j]);
    }
    soup.mesh.faces.push_back({base, base + 1, base + 2});
    soup.centroids.push_back(c);
  }
  return soup;
}

template <typename Scalar>
ScattererSoup<Scalar> translated(ScattererSoup<Scalar> soup, const Vec3<Scalar>& offset) {
  for (auto& v : soup.mesh.vertices) v += offset;
  for (auto& c : soup.centroids) c += offset;
  return soup;
}

}  // namespace canopy
