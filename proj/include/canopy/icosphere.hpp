// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "canopy/mesh.hpp"

namespace canopy {

/// Unit icosphere from n_subdiv rounds of midpoint subdivision of an
/// icosahedron. Midpoints are de-duplicated through an edge-keyed lookup so
/// the result stays watertight, and every new vertex is re-projected onto
/// the unit sphere. Yields 10*4^n + 2 vertices and 20*4^n CCW-outward faces.
template <typename Scalar = double>
TriMesh<Scalar> build_icosphere(int n_subdiv) {
  if (n_subdiv < 0 || n_subdiv > 8) {
    throw std::invalid_argument("build_icosphere: n_subdiv must be in [0, 8], got " +
                                std::to_string(n_subdiv));
  }

  const Scalar t = (Scalar(1) + std::sqrt(Scalar(5))) / Scalar(2);
  TriMesh<Scalar> mesh;
  mesh.vertices = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (auto& v : mesh.vertices) v.normalize();
  mesh.faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };

  for (int level = 0; level < n_subdiv; ++level) {
    std::unordered_map<std::uint64_t, int> midpoint;
    midpoint.reserve(mesh.faces.size() * 3 / 2);
    auto midpoint_index = [&](int i, int j) {
      const auto key = detail::edge_key(i, j);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      const int idx = mesh.vertex_count();
      mesh.vertices.push_back((mesh.vertices[i] + mesh.vertices[j]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };

    std::vector<Eigen::Vector3i> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      const int ab = midpoint_index(f[0], f[1]);
      const int bc = midpoint_index(f[1], f[2]);
      const int ca = midpoint_index(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
  }
  return mesh;
}

}  // namespace canopy
