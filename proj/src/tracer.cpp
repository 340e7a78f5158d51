// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#include "canopy/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <thread>

#include "canopy/bvh.hpp"

namespace canopy {

namespace {

using Vector3c = Eigen::Matrix<Complex, 3, 1>;

constexpr double kPi = std::numbers::pi;

// Scattered contributions more than 160 dB below the free-space level at the
// TX-RX distance are dropped; they cannot move any reported statistic but
// would stretch the delay grid arbitrarily.
constexpr double kDiffuseAmplitudeFloor = 1e-8;

struct World {
  Bvhd bvh;
  std::vector<Vec3d> normal;  // unit, construction orientation
  int soup_faces = 0;
  Material foliage;
  Material ground;

  const Material& material_of(int face) const {
    return face < soup_faces ? foliage : ground;
  }
  bool is_ground(int face) const { return face >= soup_faces; }
};

World build_world(const Scene& scene) {
  TriMeshd mesh = scene.soup.mesh;
  const int soup_faces = mesh.face_count();
  if (scene.ground.enabled) {
    // one triangle whose inscribed circle spans 200x the link length; a
    // single face avoids interior edges that could split a specular path
    // into two capture sequences
    const Vec3d mid = 0.5 * (scene.tx + scene.rx);
    const double span = (scene.tx - scene.rx).norm();
    const double r = 400.0 * std::max(span, 10.0);
    const double z = scene.ground.height;
    const int base = mesh.vertex_count();
    for (int k = 0; k < 3; ++k) {
      const double angle = kPi / 2.0 + 2.0 * kPi * k / 3.0;
      mesh.vertices.push_back({mid.x() + r * std::cos(angle), mid.y() + r * std::sin(angle), z});
    }
    mesh.faces.push_back({base, base + 1, base + 2});
  }

  World world{Bvhd(TriangleGeometryd::from_mesh(mesh)), {}, soup_faces, scene.material,
              scene.ground.material};
  const auto& geom = world.bvh.geometry();
  world.normal.reserve(geom.size());
  for (int i = 0; i < geom.size(); ++i) world.normal.push_back(geom.face_normal(i));
  return world;
}

Complex cdot(const Vector3c& field, const Vec3d& axis) {
  return field[0] * axis[0] + field[1] * axis[1] + field[2] * axis[2];
}

/// Vertical (co-pol) unit vector transverse to d: the projection of z onto
/// the plane perpendicular to d. The same for d and -d, which keeps the
/// TX/RX projections symmetric.
Vec3d vertical_pol(const Vec3d& d) {
  Vec3d v = Vec3d::UnitZ() - d.z() * d;
  const double n = v.norm();
  if (n < 1e-9) return Vec3d::UnitX();
  return v / n;
}

Vec3d fibonacci_direction(long i, long n) {
  constexpr double kGoldenConj = 0.6180339887498949;
  const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * kPi * std::fmod(static_cast<double>(i) * kGoldenConj, 1.0);
  return {r * std::cos(phi), r * std::sin(phi), z};
}

struct PolarizedBounce {
  Vec3d reflected;   // unit direction after the bounce
  Vector3c field;    // outgoing field, specular branch (includes sqrt(1-mu_s^2))
  Complex coherent;  // Gamma_te E_perp + Gamma_tm E_par at the surface
  double cos_i = 0.0;
};

PolarizedBounce polarized_bounce(const Vec3d& dir, const Vec3d& normal, const Vector3c& field,
                                 const Material& material, double carrier_hz) {
  const double cos_i = std::clamp(std::abs(dir.dot(normal)), 0.0, 1.0);
  const auto gamma = fresnel_reflection(cos_i, material, carrier_hz);
  const Vec3d reflected = (dir - 2.0 * dir.dot(normal) * normal).normalized();

  Vec3d e_perp = dir.cross(normal);
  const double perp_norm = e_perp.norm();
  if (perp_norm < 1e-12) {
    e_perp = dir.unitOrthogonal();  // normal incidence: TE/TM agree, basis free
  } else {
    e_perp /= perp_norm;
  }
  const Vec3d e_par_in = e_perp.cross(dir).normalized();
  const Vec3d e_par_out = e_perp.cross(reflected).normalized();

  const Complex f_perp = gamma.te * cdot(field, e_perp);
  const Complex f_par = gamma.tm * cdot(field, e_par_in);

  PolarizedBounce out;
  out.reflected = reflected;
  const double specular_scale = std::sqrt(std::max(0.0, 1.0 - material.mu_s * material.mu_s));
  out.field = specular_scale *
              (f_perp * e_perp.cast<Complex>() + f_par * e_par_out.cast<Complex>());
  out.coherent = f_perp + f_par;
  out.cos_i = cos_i;
  return out;
}

struct DiffuseRecord {
  MultipathComponent mpc;
  long ray = 0;
  int depth = 0;
};

struct RayBatchResult {
  std::vector<std::vector<int>> captures;
  std::vector<DiffuseRecord> diffuse;
};

void trace_ray_range(const Scene& scene, const TracerConfig& config, const World& world,
                     const Mat3d& launch_rotation, long begin, long end,
                     RayBatchResult& result) {
  const double wavelength = kSpeedOfLight / scene.carrier_hz;
  const double n_rays = static_cast<double>(config.n_candidate_rays);
  const double mean_spacing = std::sqrt(4.0 * kPi / n_rays);
  const double diffuse_norm = wavelength / std::sqrt(4.0 * kPi * n_rays);
  const double fs_amp_at_rx = wavelength / (4.0 * kPi * (scene.tx - scene.rx).norm());
  const double amplitude_floor = kDiffuseAmplitudeFloor * fs_amp_at_rx;

  std::vector<int> faces;
  for (long i = begin; i < end; ++i) {
    Vec3d dir = launch_rotation * fibonacci_direction(i, config.n_candidate_rays);
    Vec3d origin = scene.tx;
    Vector3c field = vertical_pol(dir).cast<Complex>();
    double unfolded = 0.0;
    faces.clear();

    for (;;) {
      const auto hit = world.bvh.nearest_hit({origin, dir});
      const double seg_len = hit ? hit->t : std::numeric_limits<double>::infinity();

      if (!faces.empty()) {
        const double s = dir.dot(scene.rx - origin);
        if (s > kRayEpsilon && s < seg_len) {
          const double miss = (scene.rx - (origin + s * dir)).norm();
          const double radius = config.rx_sphere_growth * (unfolded + s) * mean_spacing;
          if (miss < radius) result.captures.push_back(faces);
        }
      }
      if (!hit) break;
      if (static_cast<int>(faces.size()) >= config.max_depth) break;

      const Vec3d point = origin + hit->t * dir;
      const Material& material = world.material_of(hit->face);
      const auto bounce =
          polarized_bounce(dir, world.normal[hit->face], field, material, scene.carrier_hz);

      // Single-bounce scattered contribution toward RX (foliage faces only;
      // ground interactions stay specular). A leaf has no inside, so the
      // Lambertian lobe radiates from both faces, density |cos|/(2 pi) over
      // the full sphere; together with the unpolarized reflection product
      // g(cos_i) g(cos_s) the kernel is reciprocal under a TX/RX swap.
      if (config.enable_diffuse && material.mu_s > 0.0 && !world.is_ground(hit->face)) {
        const Vec3d to_rx = scene.rx - point;
        const double r2 = to_rx.norm();
        if (r2 > kRayEpsilon) {
          const Vec3d d_sc = to_rx / r2;
          const double cos_s =
              std::clamp(std::abs(world.normal[hit->face].dot(d_sc)), 0.0, 1.0);
          if (cos_s > 0.0 &&
              !world.bvh.segment_blocked({point, d_sc}, kRayEpsilon, r2 - kRayEpsilon)) {
            const double path_len = unfolded + hit->t + r2;
            const double tau = path_len / kSpeedOfLight;
            const double reflectance =
                unpolarized_reflection_magnitude(bounce.cos_i, material, scene.carrier_hz) *
                unpolarized_reflection_magnitude(cos_s, material, scene.carrier_hz);
            double mag = material.mu_s * field.norm() * reflectance *
                         std::sqrt(cos_s / (2.0 * kPi)) * diffuse_norm / r2;
            // the Lambertian point-source model is not valid into the near
            // field; never exceed the same-delay free-space amplitude
            mag = std::min(mag, wavelength / (4.0 * kPi * path_len));
            if (mag >= amplitude_floor) {
              const double phase = -2.0 * kPi * scene.carrier_hz * tau +
                                   (std::abs(bounce.coherent) > 0.0 ? std::arg(bounce.coherent)
                                                                    : 0.0);
              result.diffuse.push_back(
                  {MultipathComponent{tau, std::polar(mag, phase),
                                      static_cast<int>(faces.size()) + 1, PathKind::kScattered},
                   i, static_cast<int>(faces.size())});
            }
          }
        }
      }

      field = bounce.field;
      dir = bounce.reflected;
      origin = point;
      unfolded += hit->t;
      faces.push_back(hit->face);
    }
  }
}

/// Exact specular path for a bounce-face sequence via the image method:
/// mirror TX across the face planes in order, back-trace from RX, then
/// validate that every bounce point lies inside its triangle and every
/// segment is unobstructed.
std::optional<MultipathComponent> refine_specular(const Scene& scene, const World& world,
                                                  const std::vector<int>& seq) {
  const auto& geom = world.bvh.geometry();
  const int k_bounces = static_cast<int>(seq.size());

  std::vector<Vec3d> image(k_bounces + 1);
  image[0] = scene.tx;
  for (int k = 0; k < k_bounces; ++k) {
    const Vec3d& n = world.normal[seq[k]];
    const double d = n.dot(geom.a[seq[k]]);
    image[k + 1] = image[k] - 2.0 * (n.dot(image[k]) - d) * n;
  }

  std::vector<Vec3d> points(k_bounces + 2);
  points[0] = scene.tx;
  points[k_bounces + 1] = scene.rx;
  for (int k = k_bounces; k >= 1; --k) {
    const int face = seq[k - 1];
    const Vec3d& n = world.normal[face];
    const double d = n.dot(geom.a[face]);
    const Vec3d& from = image[k];
    const Vec3d& to = points[k + 1];
    const double denom = n.dot(to - from);
    if (std::abs(denom) < 1e-15) return std::nullopt;
    const double t = (d - n.dot(from)) / denom;
    if (t <= 1e-9 || t >= 1.0 - 1e-9) return std::nullopt;
    const Vec3d b = from + t * (to - from);

    // barycentric check against the face
    const Vec3d rel = b - geom.a[face];
    const double g11 = geom.e1[face].squaredNorm();
    const double g12 = geom.e1[face].dot(geom.e2[face]);
    const double g22 = geom.e2[face].squaredNorm();
    const double det = g11 * g22 - g12 * g12;
    if (det <= 0.0) return std::nullopt;
    const double r1 = rel.dot(geom.e1[face]);
    const double r2 = rel.dot(geom.e2[face]);
    const double u = (g22 * r1 - g12 * r2) / det;
    const double v = (g11 * r2 - g12 * r1) / det;
    if (u < -1e-9 || v < -1e-9 || u + v > 1.0 + 1e-9) return std::nullopt;
    points[k] = b;
  }

  double total_len = 0.0;
  std::vector<Vec3d> dirs(k_bounces + 1);
  for (int k = 0; k <= k_bounces; ++k) {
    const Vec3d seg = points[k + 1] - points[k];
    const double len = seg.norm();
    if (len < kRayEpsilon) return std::nullopt;
    dirs[k] = seg / len;
    total_len += len;
    if (world.bvh.segment_blocked({points[k], dirs[k]}, kRayEpsilon, len - kRayEpsilon)) {
      return std::nullopt;
    }
  }

  Vector3c field = vertical_pol(dirs[0]).cast<Complex>();
  for (int k = 0; k < k_bounces; ++k) {
    const auto bounce = polarized_bounce(dirs[k], world.normal[seq[k]], field,
                                         world.material_of(seq[k]), scene.carrier_hz);
    field = bounce.field;
  }
  const Complex projection = cdot(field, vertical_pol(dirs[k_bounces]));
  const double tau = total_len / kSpeedOfLight;
  const Complex amplitude = projection * (kSpeedOfLight / scene.carrier_hz) /
                            (4.0 * kPi * total_len) *
                            std::polar(1.0, -2.0 * kPi * scene.carrier_hz * tau);
  if (std::abs(amplitude) < 1e-30) return std::nullopt;
  return MultipathComponent{tau, amplitude, k_bounces, PathKind::kReflected};
}

struct KeyedComponent {
  MultipathComponent mpc;
  int rank;                  // 0 LOS, 1 reflected, 2 scattered
  std::vector<long> key;
};

}  // namespace

std::vector<MultipathComponent> trace(const Scene& scene, const TracerConfig& config,
                                      RandomStream rng) {
  scene.validate();
  config.validate();

  const World world = build_world(scene);
  const Mat3d launch_rotation = random_rotation<double>(rng);

  const long n = config.n_candidate_rays;
  const int threads = static_cast<int>(std::min<long>(config.n_threads, n));
  std::vector<RayBatchResult> batches(std::max(threads, 1));
  if (threads <= 1) {
    trace_ray_range(scene, config, world, launch_rotation, 0, n, batches[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      const long begin = n * t / threads;
      const long end = n * (t + 1) / threads;
      pool.emplace_back([&, begin, end, t] {
        trace_ray_range(scene, config, world, launch_rotation, begin, end, batches[t]);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<KeyedComponent> keyed;

  // LOS
  const Vec3d los = scene.rx - scene.tx;
  const double d = los.norm();
  const Vec3d los_dir = los / d;
  if (!world.bvh.segment_blocked({scene.tx, los_dir}, kRayEpsilon, d - kRayEpsilon)) {
    const double tau = d / kSpeedOfLight;
    const double amp = (kSpeedOfLight / scene.carrier_hz) / (4.0 * kPi * d);
    keyed.push_back({MultipathComponent{tau,
                                        std::polar(amp, -2.0 * kPi * scene.carrier_hz * tau), 0,
                                        PathKind::kLos},
                     0,
                     {}});
  }

  // specular candidates: unique bounce sequences, image-refined
  std::vector<std::vector<int>> sequences;
  for (auto& batch : batches) {
    for (auto& seq : batch.captures) sequences.push_back(std::move(seq));
  }
  std::sort(sequences.begin(), sequences.end());
  sequences.erase(std::unique(sequences.begin(), sequences.end()), sequences.end());
  for (const auto& seq : sequences) {
    if (auto mpc = refine_specular(scene, world, seq)) {
      std::vector<long> key(seq.begin(), seq.end());
      keyed.push_back({*mpc, 1, std::move(key)});
    }
  }

  for (const auto& batch : batches) {
    for (const auto& rec : batch.diffuse) {
      keyed.push_back({rec.mpc, 2, {rec.ray, rec.depth}});
    }
  }

  std::sort(keyed.begin(), keyed.end(), [](const KeyedComponent& a, const KeyedComponent& b) {
    if (a.mpc.delay != b.mpc.delay) return a.mpc.delay < b.mpc.delay;
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.key < b.key;
  });

  const double min_delay = d / kSpeedOfLight - 1e-12;
  std::vector<MultipathComponent> mpcs;
  mpcs.reserve(keyed.size());
  for (const auto& k : keyed) {
    if (!std::isfinite(k.mpc.delay) || !std::isfinite(std::abs(k.mpc.amplitude))) {
      throw std::runtime_error("trace: non-finite multipath component, geometry is degenerate");
    }
    if (k.mpc.delay < min_delay) {
      throw std::runtime_error("trace: path shorter than the TX-RX separation");
    }
    mpcs.push_back(k.mpc);
  }
  return mpcs;
}

std::vector<MultipathComponent> trace(const Scene& scene, const TracerConfig& config) {
  return trace(scene, config, RandomStream(config.seed).split(kRayStage));
}

}  // namespace canopy
