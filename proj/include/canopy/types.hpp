// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <complex>
#include <cstdint>

namespace canopy {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Box3 = Eigen::AlignedBox<Scalar, 3>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Box3d = Box3<double>;
using Complex = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;             // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

}  // namespace canopy
