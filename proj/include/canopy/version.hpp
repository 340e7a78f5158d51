// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

namespace canopy {

inline constexpr const char* kToolVersion = "1.0.0";

/// Name of the deterministic random scheme every seeded output depends on.
inline constexpr const char* kRngScheme = "splitmix64-v1";

}  // namespace canopy
