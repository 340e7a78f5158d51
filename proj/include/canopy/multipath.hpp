// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <string_view>

#include "canopy/types.hpp"

namespace canopy {

enum class PathKind { kLos, kReflected, kScattered };

constexpr std::string_view to_string(PathKind kind) {
  switch (kind) {
    case PathKind::kLos: return "los";
    case PathKind::kReflected: return "reflected";
    case PathKind::kScattered: return "scattered";
  }
  return "unknown";
}

/// One propagation path. The amplitude is the complex voltage gain relative
/// to a 0 dBm isotropic transmitter, so |amplitude|^2 sums to received power
/// in milliwatts.
struct MultipathComponent {
  double delay = 0.0;        // seconds
  Complex amplitude{0, 0};   // linear, includes the propagation phase
  int interaction_count = 0; // surface interactions along the path
  PathKind kind = PathKind::kLos;
};

}  // namespace canopy
