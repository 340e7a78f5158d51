// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "canopy/types.hpp"

namespace canopy {

/// Indexed triangle mesh. Vertices in meters, faces as CCW vertex-index
/// triples. Used both for closed envelope surfaces and for open triangle
/// soups; the topology helpers below tell the two apart.
template <typename Scalar>
struct TriMesh {
  std::vector<Vec3<Scalar>> vertices;
  std::vector<Eigen::Vector3i> faces;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
};

using TriMeshd = TriMesh<double>;

template <typename Scalar>
Scalar triangle_area(const Vec3<Scalar>& a, const Vec3<Scalar>& b, const Vec3<Scalar>& c) {
  return Scalar(0.5) * (b - a).cross(c - a).norm();
}

template <typename Scalar>
struct EdgeTopology {
  std::int64_t unique_edges = 0;
  std::int64_t defective_edges = 0;  // not shared by exactly two faces
  bool watertight = false;           // every edge shared by exactly 2 faces
  bool oriented = false;             // the two incident faces traverse it oppositely
};

namespace detail {
inline std::uint64_t edge_key(int i, int j) {
  const std::uint64_t lo = static_cast<std::uint32_t>(i < j ? i : j);
  const std::uint64_t hi = static_cast<std::uint32_t>(i < j ? j : i);
  return (hi << 32) | lo;
}
}  // namespace detail

template <typename Scalar>
EdgeTopology<Scalar> edge_topology(const TriMesh<Scalar>& mesh) {
  // counts.first: total incidences, counts.second: incidences with i < j
  std::unordered_map<std::uint64_t, std::pair<int, int>> counts;
  counts.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const int i = f[e];
      const int j = f[(e + 1) % 3];
      auto& c = counts[detail::edge_key(i, j)];
      ++c.first;
      if (i < j) ++c.second;
    }
  }
  EdgeTopology<Scalar> topo;
  topo.unique_edges = static_cast<std::int64_t>(counts.size());
  bool oriented = true;
  for (const auto& [key, c] : counts) {
    if (c.first != 2) ++topo.defective_edges;
    if (c.second != 1) oriented = false;
  }
  topo.watertight = (topo.defective_edges == 0) && !mesh.faces.empty();
  topo.oriented = topo.watertight && oriented;
  return topo;
}

template <typename Scalar>
bool is_watertight(const TriMesh<Scalar>& mesh) {
  return edge_topology(mesh).watertight;
}

/// V - E + F; equals 2 for a topological sphere.
template <typename Scalar>
std::int64_t euler_characteristic(const TriMesh<Scalar>& mesh) {
  const auto topo = edge_topology(mesh);
  return static_cast<std::int64_t>(mesh.vertices.size()) - topo.unique_edges +
         static_cast<std::int64_t>(mesh.faces.size());
}

/// Signed volume as the sum of tetrahedra spanned with the origin,
/// V = sum_f det[a b c] / 6. Positive for CCW-outward closed surfaces.
template <typename Scalar>
Scalar signed_volume(const TriMesh<Scalar>& mesh) {
  Scalar six_v = 0;
  for (const auto& f : mesh.faces) {
    const Vec3<Scalar>& a = mesh.vertices[f[0]];
    const Vec3<Scalar>& b = mesh.vertices[f[1]];
    const Vec3<Scalar>& c = mesh.vertices[f[2]];
    six_v += a.dot(b.cross(c));
  }
  return six_v / Scalar(6);
}

/// Enclosed volume of a watertight mesh. Translation-invariant because the
/// surface is closed. Throws on non-watertight input, reporting the number
/// of offending edges.
template <typename Scalar>
Scalar mesh_volume(const TriMesh<Scalar>& mesh) {
  const auto topo = edge_topology(mesh);
  if (!topo.watertight) {
    throw std::runtime_error("mesh_volume: mesh is not watertight (" +
                             std::to_string(topo.defective_edges) +
                             " edges not shared by exactly two faces)");
  }
  return std::abs(signed_volume(mesh));
}

template <typename Scalar>
Box3<Scalar> bounding_box(const TriMesh<Scalar>& mesh) {
  Box3<Scalar> box;
  for (const auto& v : mesh.vertices) box.extend(v);
  return box;
}

template <typename Scalar>
TriMesh<Scalar> translated(TriMesh<Scalar> mesh, const Vec3<Scalar>& offset) {
  for (auto& v : mesh.vertices) v += offset;
  return mesh;
}

/// Structural validity: indices in range, three distinct vertices per face,
/// face area above the degeneracy floor (1e-12 m^2).
template <typename Scalar>
void validate_mesh(const TriMesh<Scalar>& mesh) {
  const int n = mesh.vertex_count();
  for (std::size_t k = 0; k < mesh.faces.size(); ++k) {
    const auto& f = mesh.faces[k];
    for (int e = 0; e < 3; ++e) {
      if (f[e] < 0 || f[e] >= n) {
        throw std::runtime_error("mesh face " + std::to_string(k) +
                                 " references vertex " + std::to_string(f[e]) +
                                 " out of range [0, " + std::to_string(n) + ")");
      }
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw std::runtime_error("mesh face " + std::to_string(k) + " repeats a vertex");
    }
    if (triangle_area<Scalar>(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]) <=
        Scalar(1e-12)) {
      throw std::runtime_error("mesh face " + std::to_string(k) + " is degenerate");
    }
  }
}

}  // namespace canopy
