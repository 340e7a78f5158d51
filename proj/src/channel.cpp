// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#include "canopy/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace canopy {

namespace {

double sinc(double x) {
  const double px = std::numbers::pi * x;
  if (std::abs(px) < 1e-8) return 1.0 - px * px / 6.0;
  return std::sin(px) / px;
}

constexpr std::int64_t kMaxGridBins = 50'000'000;

}  // namespace

ChannelImpulseResponse shape_cir(const std::vector<MultipathComponent>& mpcs, double bandwidth_hz,
                                 int oversample) {
  if (mpcs.empty()) throw std::invalid_argument("shape_cir: empty MPC list");
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("shape_cir: bandwidth must be > 0");
  if (oversample < 2) throw std::invalid_argument("shape_cir: oversample must be >= 2");

  double tau_min = std::numeric_limits<double>::infinity();
  double tau_max = -std::numeric_limits<double>::infinity();
  for (const auto& m : mpcs) {
    tau_min = std::min(tau_min, m.delay);
    tau_max = std::max(tau_max, m.delay);
  }
  const double margin = 16.0 / bandwidth_hz;
  const double t_start = std::min(0.95 * tau_min, tau_min - margin);
  const double t_end = tau_max + margin;

  ChannelImpulseResponse cir;
  cir.dt = 1.0 / (static_cast<double>(oversample) * bandwidth_hz);
  cir.bandwidth_hz = bandwidth_hz;
  cir.oversample = oversample;
  cir.k0 = static_cast<std::int64_t>(std::floor(t_start / cir.dt));
  const auto k_end = static_cast<std::int64_t>(std::ceil(t_end / cir.dt));
  const std::int64_t n = k_end - cir.k0 + 1;
  if (n <= 0 || n > kMaxGridBins) {
    throw std::runtime_error("shape_cir: degenerate delay grid (" + std::to_string(n) + " bins)");
  }
  cir.taps = Eigen::VectorXcd::Zero(n);
  for (const auto& m : mpcs) {
    for (std::int64_t k = 0; k < n; ++k) {
      cir.taps[k] += m.amplitude * sinc(bandwidth_hz * (cir.delay(k) - m.delay));
    }
  }
  return cir;
}

PowerDelayProfile average_pdp(const std::vector<ChannelImpulseResponse>& cirs) {
  if (cirs.empty()) throw std::invalid_argument("average_pdp: no CIRs");
  const double dt = cirs.front().dt;
  std::int64_t k_lo = cirs.front().k0;
  std::int64_t k_hi = cirs.front().k0 + cirs.front().size();
  for (const auto& cir : cirs) {
    if (std::abs(cir.dt - dt) > 1e-15) {
      throw std::invalid_argument("average_pdp: CIR grid spacing mismatch beyond 1e-15 s");
    }
    k_lo = std::min(k_lo, cir.k0);
    k_hi = std::max(k_hi, cir.k0 + cir.size());
  }

  PowerDelayProfile pdp;
  pdp.dt = dt;
  pdp.k0 = k_lo;
  pdp.n_realizations = static_cast<int>(cirs.size());
  pdp.power = Eigen::VectorXd::Zero(k_hi - k_lo);
  for (const auto& cir : cirs) {
    const std::int64_t offset = cir.k0 - k_lo;
    for (std::int64_t i = 0; i < cir.size(); ++i) {
      pdp.power[offset + i] += std::norm(cir.taps[i]);
    }
  }
  pdp.power /= static_cast<double>(cirs.size());
  return pdp;
}

double rms_delay_spread(const PowerDelayProfile& pdp, double threshold_db) {
  if (pdp.size() == 0) throw std::invalid_argument("rms_delay_spread: empty PDP");
  if (!(threshold_db > 0.0))
    throw std::invalid_argument("rms_delay_spread: threshold_db must be > 0");

  const double peak = pdp.power.maxCoeff();
  const double gate = peak * std::pow(10.0, -threshold_db / 10.0);

  // Moments over bin offsets relative to the grid start; the spread is
  // translation-invariant, and small offsets avoid the cancellation that
  // absolute delays around 1e-7 s would cost.
  double total = 0.0;
  double first = 0.0;
  for (std::int64_t i = 0; i < pdp.size(); ++i) {
    const double p = pdp.power[i];
    if (p < gate || p <= 0.0) continue;
    const double x = static_cast<double>(i) * pdp.dt;
    total += p;
    first += p * x;
  }
  if (total <= 0.0) throw std::runtime_error("rms_delay_spread: PDP is empty after gating");
  const double mean = first / total;
  double second = 0.0;
  for (std::int64_t i = 0; i < pdp.size(); ++i) {
    const double p = pdp.power[i];
    if (p < gate || p <= 0.0) continue;
    const double x = static_cast<double>(i) * pdp.dt - mean;
    second += p * x * x;
  }
  return std::sqrt(second / total);
}

LinkBudget path_loss(const std::vector<MultipathComponent>& mpcs) {
  if (mpcs.empty()) throw std::invalid_argument("path_loss: empty MPC list");
  double power = 0.0;
  for (const auto& m : mpcs) power += std::norm(m.amplitude);
  if (!(power > 0.0)) throw std::runtime_error("path_loss: zero total power");
  const double rss = 10.0 * std::log10(power);
  return {rss, -rss};
}

LinkBudget path_loss(const ChannelImpulseResponse& cir) {
  if (cir.size() == 0) throw std::invalid_argument("path_loss: empty CIR");
  double power = 0.0;
  for (std::int64_t i = 0; i < cir.size(); ++i) power += std::norm(cir.taps[i]);
  power *= cir.dt * cir.bandwidth_hz;
  if (!(power > 0.0)) throw std::runtime_error("path_loss: zero total power");
  const double rss = 10.0 * std::log10(power);
  return {rss, -rss};
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("empirical_cdf: empty input");
  for (const double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("empirical_cdf: non-finite value");
  }
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> cdf;
  cdf.reserve(values.size());
  const double n = static_cast<double>(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    cdf.emplace_back(values[k], static_cast<double>(k + 1) / n);
  }
  return cdf;
}

std::vector<double> pdp_bins_dbm_above_gate(const PowerDelayProfile& pdp, double gate_db) {
  if (pdp.size() == 0) throw std::invalid_argument("pdp_bins_dbm_above_gate: empty PDP");
  const double peak = pdp.power.maxCoeff();
  const double gate = peak * std::pow(10.0, -gate_db / 10.0);
  std::vector<double> dbm;
  for (std::int64_t i = 0; i < pdp.size(); ++i) {
    const double p = pdp.power[i];
    if (p >= gate && p > 0.0) dbm.push_back(10.0 * std::log10(p));
  }
  return dbm;
}

}  // namespace canopy
