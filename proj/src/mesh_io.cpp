// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#include "canopy/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace canopy {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

void append_g17(std::string& buf, double x) {
  char tmp[32];
  std::snprintf(tmp, sizeof(tmp), "%.17g", x);
  buf += tmp;
}

void write_vertex_records(const TriMeshd& mesh, std::string& buf) {
  for (const auto& v : mesh.vertices) {
    buf += "v ";
    append_g17(buf, v.x());
    buf += ' ';
    append_g17(buf, v.y());
    buf += ' ';
    append_g17(buf, v.z());
    buf += '\n';
  }
}

void put_le(std::string& buf, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) buf += static_cast<char>((x >> (8 * i)) & 0xff);
}

void put_le(std::string& buf, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) buf += static_cast<char>((bits >> (8 * i)) & 0xff);
}

}  // namespace

void write_obj(const TriMeshd& mesh, std::ostream& out) {
  std::string buf;
  buf.reserve(mesh.vertices.size() * 64 + mesh.faces.size() * 24);
  write_vertex_records(mesh, buf);
  for (const auto& f : mesh.faces) {
    buf += "f ";
    buf += std::to_string(f[0] + 1);
    buf += ' ';
    buf += std::to_string(f[1] + 1);
    buf += ' ';
    buf += std::to_string(f[2] + 1);
    buf += '\n';
  }
  out << buf;
  if (!out) throw std::runtime_error("OBJ write failed");
}

void write_obj(const TriMeshd& mesh, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::binary);
  write_obj(mesh, out);
}

TriMeshd read_obj(std::istream& in) {
  TriMeshd mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3d v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        throw std::runtime_error("OBJ line " + std::to_string(line_no) + ": malformed vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string item;
      while (ss >> item) {
        // accept v, v/vt, v//vn forms; only the vertex index is used
        const long raw = std::strtol(item.c_str(), nullptr, 10);
        long resolved = raw;
        if (raw < 0) resolved = static_cast<long>(mesh.vertices.size()) + raw + 1;
        if (resolved < 1 || resolved > static_cast<long>(mesh.vertices.size())) {
          throw std::runtime_error("OBJ line " + std::to_string(line_no) +
                                   ": face index out of range");
        }
        idx.push_back(static_cast<int>(resolved - 1));
      }
      if (idx.size() < 3) {
        throw std::runtime_error("OBJ line " + std::to_string(line_no) +
                                 ": face needs at least 3 indices");
      }
      for (std::size_t k = 2; k < idx.size(); ++k) {
        mesh.faces.push_back({idx[0], idx[k - 1], idx[k]});
      }
    }
  }
  return mesh;
}

TriMeshd read_obj(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  return read_obj(in);
}

void write_ply(const TriMeshd& mesh, std::ostream& out) {
  std::string buf;
  buf += "ply\nformat binary_little_endian 1.0\n";
  buf += "element vertex " + std::to_string(mesh.vertices.size()) + "\n";
  buf += "property double x\nproperty double y\nproperty double z\n";
  buf += "element face " + std::to_string(mesh.faces.size()) + "\n";
  buf += "property list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) {
    put_le(buf, v.x());
    put_le(buf, v.y());
    put_le(buf, v.z());
  }
  for (const auto& f : mesh.faces) {
    buf += static_cast<char>(3);
    put_le(buf, static_cast<std::uint32_t>(f[0]));
    put_le(buf, static_cast<std::uint32_t>(f[1]));
    put_le(buf, static_cast<std::uint32_t>(f[2]));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("PLY write failed");
}

void write_ply(const TriMeshd& mesh, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::binary);
  write_ply(mesh, out);
}

void write_merged_obj(const TriMeshd& envelope, const TriMeshd& soup,
                      const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::binary);
  std::string buf;
  buf += "# scatterer soup\n";
  write_vertex_records(soup, buf);
  for (const auto& f : soup.faces) {
    buf += "f ";
    buf += std::to_string(f[0] + 1);
    buf += ' ';
    buf += std::to_string(f[1] + 1);
    buf += ' ';
    buf += std::to_string(f[2] + 1);
    buf += '\n';
  }
  buf += "# envelope wireframe\n";
  const int offset = soup.vertex_count();
  write_vertex_records(envelope, buf);
  std::set<std::pair<int, int>> edges;
  for (const auto& f : envelope.faces) {
    for (int e = 0; e < 3; ++e) {
      const int i = f[e];
      const int j = f[(e + 1) % 3];
      edges.emplace(std::min(i, j), std::max(i, j));
    }
  }
  for (const auto& [i, j] : edges) {
    buf += "l ";
    buf += std::to_string(offset + i + 1);
    buf += ' ';
    buf += std::to_string(offset + j + 1);
    buf += '\n';
  }
  out << buf;
  if (!out) throw std::runtime_error("merged OBJ write failed");
}

}  // namespace canopy
