// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "canopy/channel.hpp"
#include "canopy/envelope.hpp"
#include "canopy/tracer.hpp"

namespace canopy {

enum class SweepAxis { kNone, kRho, kVTarget };

std::string_view to_string(SweepAxis axis);

struct ChannelConfig {
  double bandwidth_hz = 2e9;
  int oversample = 8;
  double noise_gate_db = 30.0;

  void validate() const;
};

struct GeometryConfig {
  Vec3d tx{0.0, 0.0, 1.5};
  Vec3d rx{30.0, 0.0, 1.5};
  std::optional<Vec3d> crown_center;  // defaults to the TX-RX midpoint
  GroundPlane ground{};

  Vec3d crown_center_or_default() const {
    return crown_center ? *crown_center : Vec3d(0.5 * (tx + rx));
  }
};

/// Fully resolved run description; every field has a default, so an empty
/// config file is a valid single-point run at the standard parameters.
struct SweepConfig {
  FoliageParams foliage{};
  Material material{};
  GeometryConfig geometry{};
  ChannelConfig channel{};
  double carrier_hz = 80e9;
  TracerConfig tracer{};
  SweepAxis axis = SweepAxis::kNone;
  std::vector<double> values;  // sweep points; ignored for axis none
  int realizations = 50;
  std::uint64_t seed = 42;
  int histogram_bins = 20;

  void validate() const;

  /// The evaluated sweep points: `values`, or {0} for a single-point run.
  std::vector<double> sweep_points() const;
};

/// Strict section/key config parser. Unknown sections or keys, duplicate
/// keys, and malformed values are rejected with the offending line number;
/// range violations name the field.
SweepConfig parse_config_text(std::string_view text, const std::string& source_name);
SweepConfig parse_config(const std::filesystem::path& path);

/// Human-readable key reference with defaults, shown by the CLI help.
std::string config_reference();

}  // namespace canopy
