// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#include "canopy/scatter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <doctest.h>

using namespace canopy;

namespace {

/// Containment oracle for convex meshes (unperturbed icospheres): the point
/// must be on the inner side of every face plane. Independent of the
/// ray-parity test used by the sampler.
bool inside_convex(const TriMeshd& mesh, const Vec3d& p) {
  for (const auto& f : mesh.faces) {
    const Vec3d& a = mesh.vertices[f[0]];
    const Vec3d n = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a);
    if (n.dot(p - a) > 0.0) return false;
  }
  return true;
}

/// chi-square 0.999 quantile via the Wilson-Hilferty approximation.
double chi2_q999(int df) {
  const double z = 3.090232;  // Phi^-1(0.999)
  const double d = static_cast<double>(df);
  const double term = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
  return d * term * term * term;
}

double face_area(const TriMeshd& mesh, int f) {
  return triangle_area(mesh.vertices[mesh.faces[f][0]], mesh.vertices[mesh.faces[f][1]],
                       mesh.vertices[mesh.faces[f][2]]);
}

std::array<double, 3> sorted_side_lengths(const TriMeshd& mesh, int f) {
  const Vec3d& a = mesh.vertices[mesh.faces[f][0]];
  const Vec3d& b = mesh.vertices[mesh.faces[f][1]];
  const Vec3d& c = mesh.vertices[mesh.faces[f][2]];
  std::array<double, 3> sides = {(b - a).norm(), (c - b).norm(), (a - c).norm()};
  std::sort(sides.begin(), sides.end());
  return sides;
}

}  // namespace

TEST_CASE("triangle prototype side length and local frame") {
  SUBCASE("area 2 gives the documented side length") {
    const auto proto = triangle_prototype(2.0);
    CHECK(std::abs(proto.side - 2.149140) < 1e-5);
  }
  SUBCASE("area sqrt(3)/4 is the unit equilateral triangle") {
    const auto proto = triangle_prototype(std::sqrt(3.0) / 4.0);
    CHECK(std::abs(proto.side - 1.0) < 1e-12);
  }
  SUBCASE("local vertices match the closed form and are centroid-centered") {
    const auto proto = triangle_prototype(0.7);
    const double l = proto.side;
    const double r3 = std::sqrt(3.0);
    CHECK((proto.local_vertices[0] - Vec3d(0, -l / r3, 0)).norm() < 1e-15);
    CHECK((proto.local_vertices[1] - Vec3d(l / 2, l / (2 * r3), 0)).norm() < 1e-15);
    CHECK((proto.local_vertices[2] - Vec3d(-l / 2, l / (2 * r3), 0)).norm() < 1e-15);
    const Vec3d centroid =
        (proto.local_vertices[0] + proto.local_vertices[1] + proto.local_vertices[2]) / 3.0;
    CHECK(centroid.norm() < 1e-12);
    const double area = triangle_area(proto.local_vertices[0], proto.local_vertices[1],
                                      proto.local_vertices[2]);
    CHECK(std::abs(area - 0.7) / 0.7 < 1e-12);
  }
  SUBCASE("non-positive area is rejected") {
    CHECK_THROWS_AS(triangle_prototype(0.0), std::invalid_argument);
    CHECK_THROWS_AS(triangle_prototype(-1.0), std::invalid_argument);
  }
}

TEST_CASE("random rotations are orthonormal with determinant one") {
  RandomStream rng(8);
  double worst_ortho = 0.0, worst_det = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Mat3d r = random_rotation<double>(rng);
    worst_ortho = std::max(worst_ortho,
                           (r.transpose() * r - Mat3d::Identity()).cwiseAbs().maxCoeff());
    worst_det = std::max(worst_det, std::abs(r.determinant() - 1.0));
  }
  CHECK(worst_ortho < 1e-12);
  CHECK(worst_det < 1e-12);
}

TEST_CASE("rotated directions are uniform over the eight octants") {
  RandomStream rng(9);
  const Vec3d v = Vec3d(1.0, 1.0, 1.0).normalized();
  std::array<long, 8> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec3d w = random_rotation<double>(rng) * v;
    const int octant = (w.x() > 0 ? 1 : 0) | (w.y() > 0 ? 2 : 0) | (w.z() > 0 ? 4 : 0);
    ++counts[octant];
  }
  for (const long c : counts) {
    CHECK(std::abs(c / static_cast<double>(n) - 0.125) < 0.01);
  }
}

TEST_CASE("rotation preserves the prototype area") {
  RandomStream rng(10);
  const auto proto = triangle_prototype(2.0);
  for (int i = 0; i < 100; ++i) {
    const Mat3d r = random_rotation<double>(rng);
    const double area = triangle_area<double>(r * proto.local_vertices[0],
                                              r * proto.local_vertices[1],
                                              r * proto.local_vertices[2]);
    CHECK(std::abs(area - 2.0) / 2.0 < 1e-12);
  }
}

TEST_CASE("the one-shot sampler returns a contained point") {
  const auto ball = build_icosphere(1);
  RandomStream rng(2);
  for (int i = 0; i < 20; ++i) {
    CHECK(inside_convex(ball, sample_point_in_mesh(ball, rng)));
  }
}

TEST_CASE("sample_point_in_mesh draws uniformly from the envelope") {
  const auto ball = build_icosphere(2);  // unit icosphere, convex
  const PointInMeshSampler<double> sampler(ball);
  RandomStream rng(12);

  long above = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec3d p = sampler.sample(rng);
    REQUIRE(inside_convex(ball, p));
    if (p.z() > 0.0) ++above;
  }
  CHECK(std::abs(above / static_cast<double>(n) - 0.5) < 0.01);
}

TEST_CASE("acceptance rate reproduces the volume ratio") {
  const auto ball = build_icosphere(2);
  const double ratio = mesh_volume(ball) / bounding_box(ball).sizes().prod();
  const PointInMeshSampler<double> sampler(ball);
  RandomStream rng(15);
  long accepted = 0;
  const int n = 100000;
  const Vec3d lo = sampler.bounds().min();
  const Vec3d extent = sampler.bounds().sizes();
  for (int i = 0; i < n; ++i) {
    Vec3d p;
    for (int axis = 0; axis < 3; ++axis) p[axis] = lo[axis] + extent[axis] * rng.uniform01();
    if (sampler.contains(p, rng)) ++accepted;
  }
  const double rate = accepted / static_cast<double>(n);
  CHECK(std::abs(rate - ratio) / ratio < 0.02);
}

TEST_CASE("sampler rejects open envelopes") {
  auto open_mesh = build_icosphere(1);
  open_mesh.faces.pop_back();
  CHECK_THROWS_AS(PointInMeshSampler<double>{open_mesh}, std::runtime_error);
}

TEST_CASE("the rejection budget trips on a degenerate envelope") {
  // a unit icosphere with one vertex pulled 2 km away: tiny volume inside a
  // huge bounding box, so essentially every proposal is rejected
  auto spike = build_icosphere(1);
  spike.vertices[0] = Vec3d(2000.0, 2000.0, 2000.0);
  REQUIRE(is_watertight(spike));
  const PointInMeshSampler<double> sampler(spike);
  RandomStream rng(1);
  CHECK_THROWS_WITH_AS(sampler.sample(rng), doctest::Contains("rejection budget"),
                       std::runtime_error);
}

TEST_CASE("fill produces exactly floor(rho v_target) congruent triangles") {
  SUBCASE("sparse crown: rho 0.125, V 200 -> 25 triangles") {
    FoliageParams params(200.0, 0.1, 2, 0.125, 2.0, 31);
    RandomStream env_rng(31), fill_rng(32);
    const auto envelope = generate_envelope(params, env_rng);
    const auto soup = fill(envelope, params, fill_rng);
    CHECK(soup.count() == 25);
    CHECK(static_cast<long>(soup.centroids.size()) == 25);
  }
  SUBCASE("rho 0 is free space") {
    FoliageParams params(200.0, 0.1, 2, 0.0, 2.0, 31);
    RandomStream env_rng(31), fill_rng(32);
    const auto envelope = generate_envelope(params, env_rng);
    const auto soup = fill(envelope, params, fill_rng);
    CHECK(soup.count() == 0);
  }
  SUBCASE("rho 0.5, V 1000 -> 500 triangles with exact areas") {
    FoliageParams params(1000.0, 0.1, 2, 0.5, 2.0, 33);
    RandomStream env_rng(33), fill_rng(34);
    const auto envelope = generate_envelope(params, env_rng);
    const auto soup = fill(envelope, params, fill_rng);
    REQUIRE(soup.count() == 500);
    const double side = triangle_prototype(2.0).side;
    for (int f = 0; f < soup.mesh.face_count(); ++f) {
      CHECK(std::abs(face_area(soup.mesh, f) - 2.0) / 2.0 < 1e-9);
      for (const double s : sorted_side_lengths(soup.mesh, f)) {
        CHECK(std::abs(s - side) / side < 1e-9);
      }
    }
  }
}

TEST_CASE("fill count matches floor(rho v) over random parameters") {
  for (int trial = 0; trial < 40; ++trial) {
    RandomStream rng(9000 + trial);
    const double rho = rng.uniform(0.0, 2.0);
    const double v = rng.uniform(1.0, 400.0);
    FoliageParams params(v, 0.1, 1, rho, 0.5, 9000 + trial);
    RandomStream env_rng(100 + trial), fill_rng(200 + trial);
    const auto envelope = generate_envelope(params, env_rng);
    const auto soup = fill(envelope, params, fill_rng);
    CHECK(soup.count() == static_cast<long>(std::floor(rho * v)));
  }
}

TEST_CASE("fill centroids lie inside the envelope and match the faces") {
  FoliageParams params(200.0, 0.0, 2, 0.5, 2.0, 77);  // sigma 0: convex envelope
  RandomStream env_rng(77), fill_rng(78);
  const auto envelope = generate_envelope(params, env_rng);
  const auto soup = fill(envelope, params, fill_rng);
  REQUIRE(soup.count() == 100);
  for (int f = 0; f < soup.mesh.face_count(); ++f) {
    CHECK(inside_convex(envelope, soup.centroids[f]));
    const Vec3d centroid = (soup.mesh.vertices[soup.mesh.faces[f][0]] +
                            soup.mesh.vertices[soup.mesh.faces[f][1]] +
                            soup.mesh.vertices[soup.mesh.faces[f][2]]) /
                           3.0;
    CHECK((centroid - soup.centroids[f]).norm() < 1e-9);
  }
}

TEST_CASE("fill is deterministic per stream seed") {
  FoliageParams params(100.0, 0.1, 2, 0.3, 1.0, 55);
  RandomStream env_rng(55);
  const auto envelope = generate_envelope(params, env_rng);
  RandomStream a(56), b(56), c(57);
  const auto soup_a = fill(envelope, params, a);
  const auto soup_b = fill(envelope, params, b);
  const auto soup_c = fill(envelope, params, c);
  REQUIRE(soup_a.count() == soup_b.count());
  bool differs = false;
  for (int i = 0; i < soup_a.mesh.vertex_count(); ++i) {
    REQUIRE(soup_a.mesh.vertices[i] == soup_b.mesh.vertices[i]);
    differs = differs || (soup_a.mesh.vertices[i] != soup_c.mesh.vertices[i]);
  }
  CHECK(differs);
}

TEST_CASE("centroid placement is uniform: chi-square over a 4x4x4 grid") {
  FoliageParams params(200.0, 0.1, 2, 50.0, 0.01, 61);  // Q = 10000
  RandomStream env_rng(61), fill_rng(62);
  const auto envelope = generate_envelope(params, env_rng);
  const auto soup = fill(envelope, params, fill_rng);
  REQUIRE(soup.count() == 10000);

  const Box3d box = bounding_box(envelope);
  const Vec3d lo = box.min();
  const Vec3d extent = box.sizes();
  auto cell_of = [&](const Vec3d& p) {
    int idx = 0;
    for (int axis = 0; axis < 3; ++axis) {
      const int c = std::clamp(static_cast<int>(4.0 * (p[axis] - lo[axis]) / extent[axis]), 0, 3);
      idx = idx * 4 + c;
    }
    return idx;
  };

  // expected per-cell mass from an independent Monte-Carlo of the cell volumes
  std::array<double, 64> cell_volume{};
  const PointInMeshSampler<double> sampler(envelope);
  RandomStream mc_rng(63);
  const long n_mc = 1'000'000;
  long accepted = 0;
  for (long i = 0; i < n_mc; ++i) {
    Vec3d p;
    for (int axis = 0; axis < 3; ++axis) p[axis] = lo[axis] + extent[axis] * mc_rng.uniform01();
    if (sampler.contains(p, mc_rng)) {
      ++cell_volume[cell_of(p)];
      ++accepted;
    }
  }
  REQUIRE(accepted > 0);

  std::array<long, 64> observed{};
  for (const auto& c : soup.centroids) ++observed[cell_of(c)];

  double chi2 = 0.0;
  int df = -1;  // cells - 1
  for (int cell = 0; cell < 64; ++cell) {
    const double expected =
        static_cast<double>(soup.count()) * cell_volume[cell] / static_cast<double>(accepted);
    if (expected < 5.0) continue;  // standard sparse-cell exclusion
    const double diff = observed[cell] - expected;
    chi2 += diff * diff / expected;
    ++df;
  }
  REQUIRE(df > 10);
  CHECK(chi2 < chi2_q999(df));
}

TEST_CASE("face normals are uniform over octants") {
  FoliageParams params(200.0, 0.1, 2, 25.0, 0.01, 71);  // Q = 5000
  RandomStream env_rng(71), fill_rng(72);
  const auto envelope = generate_envelope(params, env_rng);
  const auto soup = fill(envelope, params, fill_rng);
  std::array<long, 8> counts{};
  for (const auto& f : soup.mesh.faces) {
    const Vec3d n = (soup.mesh.vertices[f[1]] - soup.mesh.vertices[f[0]])
                        .cross(soup.mesh.vertices[f[2]] - soup.mesh.vertices[f[0]])
                        .normalized();
    const int octant = (n.x() > 0 ? 1 : 0) | (n.y() > 0 ? 2 : 0) | (n.z() > 0 ? 4 : 0);
    ++counts[octant];
  }
  for (const long c : counts) {
    CHECK(std::abs(c / 5000.0 - 0.125) < 0.03);
  }
}
