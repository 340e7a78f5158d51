// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <filesystem>
#include <iosfwd>

#include "canopy/mesh.hpp"

namespace canopy {

// ASCII OBJ with v/f records and 1-based indices. Vertices are printed with
// 17 significant digits so a write/read round trip reproduces the doubles
// exactly.
void write_obj(const TriMeshd& mesh, std::ostream& out);
void write_obj(const TriMeshd& mesh, const std::filesystem::path& path);

// Lenient OBJ reader: consumes v and f records, skips comments and any other
// record types. Polygonal f records are fan-triangulated.
TriMeshd read_obj(std::istream& in);
TriMeshd read_obj(const std::filesystem::path& path);

// Binary little-endian PLY, double-precision vertices.
void write_ply(const TriMeshd& mesh, std::ostream& out);
void write_ply(const TriMeshd& mesh, const std::filesystem::path& path);

/// Visualization export: soup faces plus the envelope as an 'l'-record
/// wireframe in one OBJ file.
void write_merged_obj(const TriMeshd& envelope, const TriMeshd& soup,
                      const std::filesystem::path& path);

}  // namespace canopy
