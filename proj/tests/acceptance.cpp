// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors
//
// Acceptance suite: one criterion per section, one PASS/FAIL line each.
// Desk scale throughout: 1e5 candidate rays, depth 8, 10 realizations per
// sweep point.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "canopy/bvh.hpp"
#include "canopy/channel.hpp"
#include "canopy/envelope.hpp"
#include "canopy/icosphere.hpp"
#include "canopy/scatter.hpp"
#include "canopy/sweep.hpp"
#include "canopy/tracer.hpp"

using namespace canopy;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Criterion {
  std::vector<std::string> failures;
  std::string summary;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& text) {
    if (!summary.empty()) summary += ", ";
    summary += text;
  }
};

int g_failed = 0;

void run(int id, const std::string& name, double budget_s,
         const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& err) {
    c.failures.push_back(std::string("exception: ") + err.what());
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(elapsed <= budget_s, "runtime " + std::to_string(elapsed) + " s exceeds budget " +
                                     std::to_string(budget_s) + " s");
  const bool pass = c.failures.empty();
  if (!pass) ++g_failed;
  std::printf("[%s] %d. %s (%.1f s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), elapsed,
              c.summary.c_str());
  for (const auto& f : c.failures) std::printf("       failure: %s\n", f.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

SweepConfig desk_config() {
  SweepConfig cfg;
  cfg.tracer.n_candidate_rays = 100000;
  cfg.tracer.max_depth = 8;
  cfg.realizations = 10;
  cfg.seed = 42;
  return cfg;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "canopy_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const double kFsplDb = 20.0 * std::log10(4.0 * kPi * 30.0 * 80e9 / kSpeedOfLight);

// --- criteria ------------------------------------------------------------

void criterion_free_space(Criterion& c) {
  SweepConfig cfg = desk_config();
  cfg.axis = SweepAxis::kRho;
  cfg.values = {0.0};
  const RealizationOutput out = run_realization(cfg, 0.0, 0);
  c.require(out.record.error.empty(), "realization failed: " + out.record.error);
  c.require(std::abs(out.record.pl_db - 100.0) <= 0.3,
            fmt("PL %.3f dB outside 100.0 +- 0.3 dB", out.record.pl_db));
  c.require(out.record.drms_ns < 0.5, fmt("D_RMS %.3f ns not < 0.5 ns", out.record.drms_ns));
  c.note(fmt("PL %.2f dB (FSPL %.2f)", out.record.pl_db, kFsplDb));
  c.note(fmt("D_RMS %.3f ns", out.record.drms_ns));
}

void criterion_density_trend(Criterion& c) {
  SweepConfig cfg = desk_config();
  cfg.axis = SweepAxis::kRho;
  cfg.values = {0.0, 0.25, 0.5, 0.75, 1.0};
  cfg.tracer.n_threads = 4;
  const SweepOutput out = run_sweep(cfg, fresh_dir("density"));

  std::vector<double> excess, drms;
  for (const auto& p : out.aggregates.points) {
    excess.push_back(p.mean_pl_db - kFsplDb);
    drms.push_back(p.mean_drms_ns);
  }
  for (std::size_t i = 1; i < excess.size(); ++i) {
    c.require(excess[i] > excess[i - 1],
              fmt("mean excess loss not strictly increasing: %.2f dB -> %.2f dB",
                  excess[i - 1], excess[i]));
  }
  c.require(excess.back() >= 10.0, fmt("excess loss %.2f dB at rho=1 below 10 dB", excess.back()));
  c.require(drms.front() < 0.5, fmt("D_RMS %.3f ns at rho=0 not < 0.5 ns", drms.front()));
  c.require(drms.back() >= 1.0 && drms.back() <= 20.0,
            fmt("D_RMS %.3f ns at rho=1 outside [1, 20] ns", drms.back()));
  c.note(fmt("excess %.1f -> %.1f dB", excess[1], excess.back()));
  c.note(fmt("D_RMS %.2f -> %.2f ns", drms.front(), drms.back()));
}

void criterion_volume_trend(Criterion& c) {
  SweepConfig cfg = desk_config();
  cfg.axis = SweepAxis::kVTarget;
  cfg.values = {200.0, 1000.0};
  cfg.tracer.n_threads = 4;
  const SweepOutput out = run_sweep(cfg, fresh_dir("volume"));

  const double d200 = out.aggregates.points[0].mean_drms_ns;
  const double d1000 = out.aggregates.points[1].mean_drms_ns;
  c.require(d1000 > d200, fmt("mean D_RMS(1000) %.3f ns not above D_RMS(200) %.3f ns", d1000, d200));
  for (const double d : {d200, d1000}) {
    c.require(d >= 0.1 && d <= 10.0, fmt("mean D_RMS %.3f ns outside [0.1, 10] ns", d));
  }
  c.note(fmt("D_RMS 200 m^3: %.2f ns, 1000 m^3: %.2f ns", d200, d1000));
}

void criterion_geometry_oracles(Criterion& c) {
  // icosphere counts
  const auto ico0 = build_icosphere(0);
  const auto ico2 = build_icosphere(2);
  c.require(ico0.vertex_count() == 12 && ico0.face_count() == 20, "icosphere n=0 counts wrong");
  c.require(ico2.vertex_count() == 162 && ico2.face_count() == 320, "icosphere n=2 counts wrong");

  // exact rescaled volume over 100 random seeds
  double worst_vol = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    RandomStream rng(31000 + trial);
    const double v_target = rng.uniform(1.0, 2000.0);
    const double sigma = rng.uniform(0.0, 0.5);
    auto mesh = perturb(build_icosphere(2), sigma, rng);
    const auto [scaled, s] = scale_to_volume(std::move(mesh), v_target);
    worst_vol = std::max(worst_vol, std::abs(mesh_volume(scaled) - v_target) / v_target);
  }
  c.require(worst_vol <= 1e-9, fmt("rescaled volume off by %.2e relative", worst_vol));
  c.note(fmt("volume error %.1e", worst_vol));

  // Monte-Carlo volume cross-check at the standard perturbation strength
  FoliageParams params{};
  params.seed = 42;
  RandomStream env_rng(42), mc_rng(43);
  const auto envelope = generate_envelope(params, env_rng);
  const double exact = mesh_volume(envelope);
  const double estimate = mc_volume_estimate(envelope, 1'000'000, mc_rng);
  c.require(std::abs(estimate - exact) / exact <= 0.02,
            fmt("MC volume %.2f vs exact %.2f beyond 2%%", estimate, exact));
  c.note(fmt("MC volume rel err %.2e", std::abs(estimate - exact) / exact));

  // rotation sampling
  RandomStream rot_rng(44);
  double worst_ortho = 0.0, worst_det = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Mat3d r = random_rotation<double>(rot_rng);
    worst_ortho =
        std::max(worst_ortho, (r.transpose() * r - Mat3d::Identity()).cwiseAbs().maxCoeff());
    worst_det = std::max(worst_det, std::abs(r.determinant() - 1.0));
  }
  c.require(worst_ortho < 1e-12, fmt("rotation orthonormality error %.2e", worst_ortho));
  c.require(worst_det < 1e-12, fmt("rotation determinant error %.2e", worst_det));

  // soup areas and exact count over randomized parameters
  double worst_area = 0.0;
  bool counts_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    RandomStream rng(32000 + trial);
    const double rho = rng.uniform(0.0, 1.5);
    const double v = rng.uniform(5.0, 300.0);
    FoliageParams p(v, 0.1, 2, rho, 2.0, 32000 + trial);
    RandomStream env(100 + trial), fill_rng(200 + trial);
    const auto env_mesh = generate_envelope(p, env);
    const auto soup = fill(env_mesh, p, fill_rng);
    counts_ok = counts_ok && (soup.count() == static_cast<long>(std::floor(rho * v)));
    for (const auto& f : soup.mesh.faces) {
      const double area = triangle_area(soup.mesh.vertices[f[0]], soup.mesh.vertices[f[1]],
                                        soup.mesh.vertices[f[2]]);
      worst_area = std::max(worst_area, std::abs(area - 2.0) / 2.0);
    }
  }
  c.require(counts_ok, "soup count differs from floor(rho v)");
  c.require(worst_area <= 1e-9, fmt("soup face area off by %.2e relative", worst_area));
  c.note(fmt("area error %.1e", worst_area));
}

void criterion_ray_oracles(Criterion& c) {
  // BVH vs brute force, three regression soups x 1e4 rays
  long total_hits = 0;
  for (const std::uint64_t seed : {901ull, 902ull, 903ull}) {
    FoliageParams p(150.0, 0.1, 2, 1.0, 2.0, seed);
    RandomStream env(seed), fill_rng(seed + 1);
    const auto soup = fill(generate_envelope(p, env), p, fill_rng);
    const auto geom = TriangleGeometryd::from_mesh(soup.mesh);
    const Bvhd bvh(geom);
    RandomStream ray_rng(seed + 2);
    for (int i = 0; i < 10000; ++i) {
      const Vec3d origin(ray_rng.uniform(-6, 6), ray_rng.uniform(-6, 6), ray_rng.uniform(-6, 6));
      const Rayd ray{origin, ray_rng.unit_vector()};
      const auto fast = bvh.nearest_hit(ray);
      const auto slow = brute_force_nearest(geom, ray);
      const bool same = fast.has_value() == slow.has_value() &&
                        (!fast || (fast->face == slow->face && fast->t == slow->t));
      if (!same) {
        c.require(false, "BVH result differs from brute force");
        return;
      }
      if (fast) ++total_hits;
    }
  }
  c.note(fmt("BVH agreement on 30000 rays (%.0f hits)", static_cast<double>(total_hits)));

  // single-mirror image oracle
  Scene mirror;
  mirror.tx = {0.0, 0.0, 0.0};
  mirror.rx = {30.0, 0.0, 0.0};
  mirror.material = Material{17.0, 0.05, 0.0};
  mirror.soup.mesh.vertices = {{-185.0, 10.0, -200.0}, {215.0, 10.0, -200.0}, {15.0, 10.0, 400.0}};
  mirror.soup.mesh.faces = {{0, 1, 2}};
  TracerConfig tc;
  tc.n_candidate_rays = 200000;
  tc.max_depth = 3;
  const auto mpcs = trace(mirror, tc);
  c.require(mpcs.size() == 2, fmt("mirror scene returned %.0f paths, expected 2",
                                  static_cast<double>(mpcs.size())));
  if (mpcs.size() == 2) {
    const double len = 2.0 * std::sqrt(15.0 * 15.0 + 10.0 * 10.0);
    const double tau = len / kSpeedOfLight;
    c.require(std::abs(mpcs[1].delay - tau) <= 1e-9 * tau,
              fmt("mirror delay %.6e s vs oracle %.6e s", mpcs[1].delay, tau));
    const double cos_i = 10.0 / std::sqrt(325.0);
    const double im = 0.05 / (2.0 * kPi * mirror.carrier_hz * kVacuumPermittivity);
    const std::complex<double> eps(17.0, -im);
    const std::complex<double> root = std::sqrt(eps - (1.0 - cos_i * cos_i));
    const double gamma = std::abs((cos_i - root) / (cos_i + root));
    const double expected = gamma * (kSpeedOfLight / mirror.carrier_hz) / (4.0 * kPi * len);
    c.require(std::abs(std::abs(mpcs[1].amplitude) - expected) <= 1e-9 * expected,
              fmt("mirror amplitude %.6e vs oracle %.6e", std::abs(mpcs[1].amplitude), expected));
    c.note("mirror delay/amplitude at 1e-9");
  }

  // normal-incidence reflection magnitude
  const auto gamma = fresnel_reflection(1.0, Material{17.0, 0.05, 0.5}, 80e9);
  c.require(std::abs(std::abs(gamma.te) - 0.6096) <= 1e-3,
            fmt("normal-incidence |Gamma| %.4f vs 0.6096", std::abs(gamma.te)));
  c.note(fmt("|Gamma| %.4f", std::abs(gamma.te)));

  // reciprocity of the specular path set
  Scene recip = mirror;
  recip.soup.mesh.vertices.insert(recip.soup.mesh.vertices.end(),
                                  {{-185.0, -6.0, -200.0}, {215.0, -6.0, -200.0},
                                   {15.0, -6.0, 400.0}});
  recip.soup.mesh.faces.push_back({3, 4, 5});
  Scene swapped = recip;
  std::swap(swapped.tx, swapped.rx);
  const auto fwd = trace(recip, tc);
  const auto rev = trace(swapped, tc);
  c.require(fwd.size() == rev.size(), "specular path counts differ under TX/RX swap");
  if (fwd.size() == rev.size()) {
    for (std::size_t i = 0; i < fwd.size(); ++i) {
      c.require(std::abs(fwd[i].delay - rev[i].delay) <= 1e-6 * fwd[i].delay,
                "specular delay not reciprocal");
      c.require(std::abs(std::abs(fwd[i].amplitude) - std::abs(rev[i].amplitude)) <=
                    1e-6 * std::abs(fwd[i].amplitude),
                "specular amplitude not reciprocal");
    }
    c.note(fmt("%.0f specular paths reciprocal", static_cast<double>(fwd.size())));
  }
}

void criterion_channel_oracles(Criterion& c) {
  const double dt = 0.0625e-9;
  auto make_pdp = [&](const std::vector<std::pair<double, double>>& taps) {
    PowerDelayProfile pdp;
    std::int64_t k_lo = INT64_MAX, k_hi = INT64_MIN;
    for (const auto& [ns, p] : taps) {
      const auto k = static_cast<std::int64_t>(std::llround(ns * 1e-9 / dt));
      k_lo = std::min(k_lo, k);
      k_hi = std::max(k_hi, k);
    }
    pdp.dt = dt;
    pdp.k0 = k_lo;
    pdp.n_realizations = 1;
    pdp.power = Eigen::VectorXd::Zero(k_hi - k_lo + 1);
    for (const auto& [ns, p] : taps) {
      pdp.power[static_cast<std::int64_t>(std::llround(ns * 1e-9 / dt)) - k_lo] += p;
    }
    return pdp;
  };

  c.require(rms_delay_spread(make_pdp({{100.0, 1.0}})) == 0.0, "single-tap D_RMS not zero");

  RandomStream rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const double sep_ns = 0.0625 * (1 + static_cast<int>(rng.uniform(0.0, 400.0)));
    const double drms = rms_delay_spread(make_pdp({{100.0, 1.0}, {100.0 + sep_ns, 1.0}}));
    c.require(std::abs(drms - 0.5 * sep_ns * 1e-9) <= 1e-12 * sep_ns * 1e-9 + 1e-24,
              "two-tap D_RMS differs from dtau/2");
  }

  const double three_tap =
      rms_delay_spread(make_pdp({{100.0, 1.0}, {110.0, 1.0}, {120.0, 2.0}}));
  c.require(std::abs(three_tap - 8.2915619758885e-9) <= 1e-9 * 8.2915619758885e-9,
            fmt("three-tap D_RMS %.6e s vs 8.2915619758885e-9 s", three_tap));
  c.note(fmt("three-tap D_RMS %.4f ns", three_tap * 1e9));

  // Parseval consistency of the sinc shaping
  const std::vector<MultipathComponent> one = {{100e-9, Complex(1.0, 0.0), 0, PathKind::kLos}};
  const auto cir = shape_cir(one, 2e9, 8);
  double energy = 0.0;
  for (std::int64_t i = 0; i < cir.size(); ++i) energy += std::norm(cir.taps[i]);
  energy *= cir.dt * cir.bandwidth_hz;
  c.require(std::abs(energy - 1.0) <= 0.01, fmt("sinc energy %.4f outside 1 +- 1%%", energy));
  c.note(fmt("sinc energy %.4f", energy));

  // scale and translation invariance
  const auto base = make_pdp({{100.0, 1.0}, {108.0, 0.5}, {131.0, 2.0}});
  const double d0 = rms_delay_spread(base);
  auto scaled = base;
  scaled.power *= 3.7e5;
  c.require(std::abs(rms_delay_spread(scaled) - d0) <= 1e-12 * d0, "scale invariance violated");
  auto moved = base;
  moved.k0 += 160000;
  c.require(rms_delay_spread(moved) == d0, "translation invariance violated");
}

void criterion_reproducibility(Criterion& c) {
  SweepConfig cfg = desk_config();
  cfg.axis = SweepAxis::kRho;
  cfg.values = {0.0, 0.25, 0.5, 0.75, 1.0};

  const fs::path dir1 = fresh_dir("repro_t1");
  const fs::path dir4 = fresh_dir("repro_t4");
  cfg.tracer.n_threads = 1;
  run_sweep(cfg, dir1);
  cfg.tracer.n_threads = 4;
  run_sweep(cfg, dir4);

  const std::string a = slurp(dir1 / "records.csv");
  const std::string b = slurp(dir4 / "records.csv");
  c.require(!a.empty(), "records.csv missing");
  c.require(a == b, "records.csv differs between 1 and 4 worker threads");
  c.note(fmt("%.0f byte records.csv identical across thread counts",
             static_cast<double>(a.size())));
}

}  // namespace

int main() {
  std::printf("canopy acceptance suite (desk scale: 1e5 rays, depth 8, 10 realizations)\n");
  run(1, "free-space anchor", 1.0, criterion_free_space);
  run(2, "density trend", 600.0, criterion_density_trend);
  run(3, "volume trend", 300.0, criterion_volume_trend);
  run(4, "geometry oracle suite", 120.0, criterion_geometry_oracles);
  run(5, "ray-engine oracle suite", 60.0, criterion_ray_oracles);
  run(6, "channel-math oracle suite", 10.0, criterion_channel_oracles);
  run(7, "reproducibility across thread counts", 600.0, criterion_reproducibility);
  if (g_failed == 0) {
    std::printf("all 7 acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", g_failed);
  }
  return g_failed;
}
