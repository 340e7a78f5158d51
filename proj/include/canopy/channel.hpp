// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "canopy/multipath.hpp"
#include "canopy/types.hpp"

namespace canopy {

/// Band-limited sampled channel impulse response.
///
/// Taps live on the absolute lattice tau_k = (k0 + k) * dt with
/// dt = 1 / (oversample * bandwidth); anchoring every CIR of a run to the
/// same lattice lets multi-realization averages align bins exactly.
struct ChannelImpulseResponse {
  double dt = 0.0;           // grid spacing, seconds
  std::int64_t k0 = 0;       // lattice index of the first tap
  Eigen::VectorXcd taps;     // complex amplitudes on the grid
  double bandwidth_hz = 0.0;
  int oversample = 0;

  std::int64_t size() const { return taps.size(); }
  double delay(std::int64_t i) const { return static_cast<double>(k0 + i) * dt; }
};

struct PowerDelayProfile {
  double dt = 0.0;
  std::int64_t k0 = 0;
  Eigen::VectorXd power;  // linear, relative to 0 dBm TX
  int n_realizations = 0;

  std::int64_t size() const { return power.size(); }
  double delay(std::int64_t i) const { return static_cast<double>(k0 + i) * dt; }
};

/// Sinc pulse shaping of ideal multipath components onto the sampling
/// lattice: taps(tau_k) = sum_m a_m sinc(B (tau_k - tau_m)). The grid spans
/// at least [0.95 tau_min, tau_max + 16/B] so that the truncated sinc tails
/// keep the band-limited energy within 1% of sum |a_m|^2.
ChannelImpulseResponse shape_cir(const std::vector<MultipathComponent>& mpcs, double bandwidth_hz,
                                 int oversample);

/// P(tau_k) = mean over realizations of |h_r(tau_k)|^2. All inputs must share
/// the sampling lattice (spacing tolerance 1e-15 s); grids are union-padded
/// with zeros.
PowerDelayProfile average_pdp(const std::vector<ChannelImpulseResponse>& cirs);

/// RMS delay spread: square root of the second central moment of the PDP,
/// after zeroing every bin more than threshold_db below the peak. The noise
/// gate keeps sinc sidelobes from inflating the spread.
double rms_delay_spread(const PowerDelayProfile& pdp, double threshold_db = 30.0);

struct LinkBudget {
  double rss_dbm = 0.0;
  double pl_db = 0.0;
};

/// RSS = 10 log10(sum |a_m|^2) dBm for a 0 dBm transmitter, PL = -RSS.
LinkBudget path_loss(const std::vector<MultipathComponent>& mpcs);
/// Same figure from a shaped CIR, sum |taps|^2 dt B; Parseval-consistent
/// with the MPC form within 1% for adequate grid margins.
LinkBudget path_loss(const ChannelImpulseResponse& cir);

/// Right-continuous empirical CDF: sorted values with probabilities k/n.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);

/// Per-bin PDP powers in dBm, restricted to bins within gate_db of the peak.
/// This is the sample set the emitted CDF files are built from.
std::vector<double> pdp_bins_dbm_above_gate(const PowerDelayProfile& pdp, double gate_db);

}  // namespace canopy
