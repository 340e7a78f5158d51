// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "canopy/icosphere.hpp"
#include "canopy/mesh.hpp"
#include "canopy/rng.hpp"

namespace canopy {

/// User-facing crown generation parameters.
///
/// sigma is applied to the unit-radius icosphere *before* the volume rescale,
/// so it is expressed in pre-scale units: the same sigma dents a large crown
/// proportionally more in absolute meters.
struct FoliageParams {
  double v_target = 200.0;  // target crown volume, m^3
  double sigma = 0.1;       // vertex perturbation std-dev, pre-scale units
  int n_subdiv = 2;         // icosphere subdivision count
  double rho = 0.125;       // scatterer density, triangles / m^3
  double area = 2.0;        // scatterer triangle area, m^2
  std::uint64_t seed = 0;   // realization seed

  FoliageParams() = default;
  FoliageParams(double v_target, double sigma, int n_subdiv, double rho, double area,
                std::uint64_t seed)
      : v_target(v_target), sigma(sigma), n_subdiv(n_subdiv), rho(rho), area(area), seed(seed) {
    validate();
  }

  void validate() const {
    if (!(v_target > 0.0)) throw std::invalid_argument("FoliageParams: v_target must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("FoliageParams: sigma must be >= 0");
    if (n_subdiv < 0 || n_subdiv > 8)
      throw std::invalid_argument("FoliageParams: n_subdiv must be in [0, 8]");
    if (!(rho >= 0.0)) throw std::invalid_argument("FoliageParams: rho must be >= 0");
    if (!(area > 0.0)) throw std::invalid_argument("FoliageParams: area must be > 0");
  }
};

/// Displace every vertex independently by N(0, sigma^2 I). Topology is
/// untouched; with sigma = 0 the output is bitwise equal to the input.
template <typename Scalar>
TriMesh<Scalar> perturb(TriMesh<Scalar> mesh, Scalar sigma, RandomStream& rng) {
  if (!(sigma >= Scalar(0))) throw std::invalid_argument("perturb: sigma must be >= 0");
  for (auto& v : mesh.vertices) {
    v += rng.normal3(static_cast<double>(sigma)).template cast<Scalar>();
  }
  return mesh;
}

/// Uniform rescale to an exact target volume: s = (v_target / V0)^(1/3).
/// Returns the scaled mesh and the applied factor.
template <typename Scalar>
std::pair<TriMesh<Scalar>, Scalar> scale_to_volume(TriMesh<Scalar> mesh, Scalar v_target) {
  if (!(v_target > Scalar(0)))
    throw std::invalid_argument("scale_to_volume: v_target must be > 0");
  const Scalar v0 = mesh_volume(mesh);
  if (v0 <= Scalar(1e-12))
    throw std::runtime_error("scale_to_volume: degenerate input volume");
  const Scalar s = std::cbrt(v_target / v0);
  for (auto& v : mesh.vertices) v *= s;
  return {std::move(mesh), s};
}

/// Full envelope pipeline: icosphere, Gaussian perturbation, volume rescale.
template <typename Scalar = double>
TriMesh<Scalar> generate_envelope(const FoliageParams& params, RandomStream& rng) {
  params.validate();
  auto mesh = build_icosphere<Scalar>(params.n_subdiv);
  mesh = perturb(std::move(mesh), static_cast<Scalar>(params.sigma), rng);
  return scale_to_volume(std::move(mesh), static_cast<Scalar>(params.v_target)).first;
}

}  // namespace canopy
