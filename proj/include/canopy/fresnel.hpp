// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "canopy/types.hpp"

namespace canopy {

/// Lossy-dielectric surface parameters.
struct Material {
  double eps_r = 17.0;  // relative permittivity
  double kappa = 0.05;  // conductivity, S/m
  double mu_s = 0.50;   // scattering coefficient in [0, 1]

  void validate() const {
    if (!(eps_r >= 1.0)) throw std::invalid_argument("Material: eps_r must be >= 1");
    if (!(kappa >= 0.0)) throw std::invalid_argument("Material: kappa must be >= 0");
    if (!(mu_s >= 0.0 && mu_s <= 1.0))
      throw std::invalid_argument("Material: mu_s must be in [0, 1]");
  }
};

template <typename Scalar>
struct FresnelCoefficients {
  std::complex<Scalar> te;  // E-field perpendicular to the plane of incidence
  std::complex<Scalar> tm;  // E-field in the plane of incidence
};

/// Complex relative permittivity eps_r - j kappa / (2 pi f eps0).
template <typename Scalar>
std::complex<Scalar> complex_permittivity(const Material& material, Scalar carrier_hz) {
  const Scalar imag = static_cast<Scalar>(
      material.kappa / (2.0 * std::numbers::pi * carrier_hz * kVacuumPermittivity));
  return {static_cast<Scalar>(material.eps_r), -imag};
}

/// Fresnel reflection coefficients of a lossy dielectric half-space for both
/// polarizations, air side, as a function of the cosine of the incidence
/// angle measured from the surface normal. |Gamma| <= 1 for both.
template <typename Scalar>
FresnelCoefficients<Scalar> fresnel_reflection(Scalar cos_incidence, const Material& material,
                                               Scalar carrier_hz) {
  const Scalar ci = std::clamp(cos_incidence, Scalar(0), Scalar(1));
  const std::complex<Scalar> eps = complex_permittivity(material, carrier_hz);
  const Scalar sin2 = Scalar(1) - ci * ci;
  const std::complex<Scalar> root = std::sqrt(eps - sin2);
  return {
      (ci - root) / (ci + root),
      (eps * ci - root) / (eps * ci + root),
  };
}

/// Polarization-averaged reflection magnitude sqrt((|te|^2 + |tm|^2) / 2).
template <typename Scalar>
Scalar unpolarized_reflection_magnitude(Scalar cos_incidence, const Material& material,
                                        Scalar carrier_hz) {
  const auto gamma = fresnel_reflection(cos_incidence, material, carrier_hz);
  return std::sqrt((std::norm(gamma.te) + std::norm(gamma.tm)) / Scalar(2));
}

}  // namespace canopy
