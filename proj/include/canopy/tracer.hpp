// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "canopy/fresnel.hpp"
#include "canopy/multipath.hpp"
#include "canopy/rng.hpp"
#include "canopy/scatter.hpp"
#include "canopy/types.hpp"

namespace canopy {

/// Optional flat ground, realized as two large triangles with their own
/// material. Disabled by default; the free-space anchor at rho = 0 assumes
/// no ground return.
struct GroundPlane {
  bool enabled = false;
  double height = 0.0;  // z of the plane, meters
  Material material{5.0, 0.1, 0.3};
};

struct Scene {
  ScattererSoupd soup;  // world coordinates
  Vec3d tx{0.0, 0.0, 1.5};
  Vec3d rx{30.0, 0.0, 1.5};
  Material material{};  // foliage triangles
  double carrier_hz = 80e9;
  GroundPlane ground{};

  void validate() const {
    if ((tx - rx).norm() <= 0.0) throw std::invalid_argument("Scene: tx must differ from rx");
    if (!(carrier_hz > 0.0)) throw std::invalid_argument("Scene: carrier_hz must be > 0");
    material.validate();
    if (ground.enabled) ground.material.validate();
  }
};

struct TracerConfig {
  long n_candidate_rays = 100'000;
  int max_depth = 8;              // specular bounces per candidate ray
  double rx_sphere_growth = 1.0;  // gamma in r = gamma * L * mean ray spacing
  bool enable_diffuse = true;
  std::uint64_t seed = 0;  // orients the launch grid; full determinism contract
  int n_threads = 1;

  void validate() const {
    if (n_candidate_rays < 1)
      throw std::invalid_argument("TracerConfig: n_candidate_rays must be >= 1");
    if (max_depth < 1 || max_depth > 25)
      throw std::invalid_argument("TracerConfig: max_depth must be in [1, 25]");
    if (!(rx_sphere_growth > 0.0))
      throw std::invalid_argument("TracerConfig: rx_sphere_growth must be > 0");
    if (n_threads < 1) throw std::invalid_argument("TracerConfig: n_threads must be >= 1");
  }
};

/// Shooting-and-bouncing-rays tracer.
///
/// Candidate rays launch from TX on a seed-rotated Fibonacci sphere. A
/// specular bounce chain is followed per ray; whenever a segment passes
/// within the growing reception sphere of RX the bounce face sequence is
/// recorded, and each unique sequence is then refined with the image method,
/// so reported specular paths carry exact geometry rather than the capture
/// ray's. At every surface hit a single-bounce diffuse contribution toward
/// RX (Lambertian lobe, power fraction mu_s^2 |Gamma|^2) is accumulated when
/// RX is visible. Polarization follows a vertical launch field with TE/TM
/// decomposition per bounce; specular bounces scale by Gamma sqrt(1-mu_s^2).
///
/// The returned list is sorted and de-duplicated, and is bitwise identical
/// for a fixed (scene, config, rng seed) regardless of n_threads.
std::vector<MultipathComponent> trace(const Scene& scene, const TracerConfig& config,
                                      RandomStream rng);

/// Convenience overload seeding the launch stream from config.seed.
std::vector<MultipathComponent> trace(const Scene& scene, const TracerConfig& config);

}  // namespace canopy
