// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#include "canopy/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "canopy/rng.hpp"
#include "canopy/tracer.hpp"
#include "canopy/version.hpp"

namespace canopy {

namespace {

namespace fs = std::filesystem;

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::binary) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

double parse_field_double(const std::string& token, const fs::path& path) {
  char* end = nullptr;
  const double x = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    throw std::runtime_error(path.string() + ": malformed numeric field '" + token + "'");
  }
  return x;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string point_label(const SweepConfig& config, double value) {
  if (config.axis == SweepAxis::kNone) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", value);
  return std::string("_") + std::string(to_string(config.axis)) + "_" + buf;
}

// ---- resumable per-realization state ----------------------------------

constexpr char kCirMagic[8] = {'C', 'A', 'N', 'O', 'P', 'Y', 'C', '1'};

void write_state(const fs::path& state_dir, int point, int realization,
                 const RealizationOutput& out) {
  const std::string stem = "p" + std::to_string(point) + "_r" + std::to_string(realization);
  {
    auto f = open_out(state_dir / (stem + ".rec.tmp"));
    const auto& r = out.record;
    f << format9(r.point_value) << ',' << r.realization << ',' << r.seed << ','
      << format9(r.rss_dbm) << ',' << format9(r.pl_db) << ',' << format9(r.drms_ns) << ','
      << r.n_mpcs << ',' << format9(r.wall_time_s) << ',' << r.error << '\n';
  }
  {
    auto f = open_out(state_dir / (stem + ".cir.tmp"));
    f.write(kCirMagic, sizeof(kCirMagic));
    const auto& cir = out.cir;
    const std::int64_t n = cir.size();
    auto put = [&](const void* p, std::size_t bytes) {
      f.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
    };
    put(&cir.k0, 8);
    put(&cir.dt, 8);
    put(&cir.bandwidth_hz, 8);
    const std::int64_t oversample = cir.oversample;
    put(&oversample, 8);
    put(&n, 8);
    for (std::int64_t i = 0; i < n; ++i) {
      const double re = cir.taps[i].real();
      const double im = cir.taps[i].imag();
      put(&re, 8);
      put(&im, 8);
    }
  }
  // publish atomically so an interrupted run never leaves half files behind
  fs::rename(state_dir / (stem + ".rec.tmp"), state_dir / (stem + ".rec"));
  fs::rename(state_dir / (stem + ".cir.tmp"), state_dir / (stem + ".cir"));
}

bool state_exists(const fs::path& state_dir, int point, int realization) {
  const std::string stem = "p" + std::to_string(point) + "_r" + std::to_string(realization);
  return fs::exists(state_dir / (stem + ".rec")) && fs::exists(state_dir / (stem + ".cir"));
}

std::pair<RealizationRecord, ChannelImpulseResponse> load_state(const fs::path& state_dir,
                                                                int point, int realization) {
  const std::string stem = "p" + std::to_string(point) + "_r" + std::to_string(realization);
  const fs::path rec_path = state_dir / (stem + ".rec");
  std::ifstream rec_in(rec_path);
  if (!rec_in) throw std::runtime_error("cannot read " + rec_path.string());
  std::string line;
  std::getline(rec_in, line);
  const auto fields = split_csv_line(line);
  if (fields.size() != 9) throw std::runtime_error(rec_path.string() + ": malformed record");
  RealizationRecord rec;
  rec.point_value = parse_field_double(fields[0], rec_path);
  rec.realization = static_cast<int>(std::strtol(fields[1].c_str(), nullptr, 10));
  rec.seed = std::strtoull(fields[2].c_str(), nullptr, 10);
  rec.rss_dbm = parse_field_double(fields[3], rec_path);
  rec.pl_db = parse_field_double(fields[4], rec_path);
  rec.drms_ns = parse_field_double(fields[5], rec_path);
  rec.n_mpcs = std::strtol(fields[6].c_str(), nullptr, 10);
  rec.wall_time_s = parse_field_double(fields[7], rec_path);
  rec.error = fields[8];

  const fs::path cir_path = state_dir / (stem + ".cir");
  std::ifstream cir_in(cir_path, std::ios::binary);
  if (!cir_in) throw std::runtime_error("cannot read " + cir_path.string());
  char magic[8];
  cir_in.read(magic, 8);
  if (std::memcmp(magic, kCirMagic, 8) != 0) {
    throw std::runtime_error(cir_path.string() + ": bad magic");
  }
  ChannelImpulseResponse cir;
  std::int64_t oversample = 0, n = 0;
  cir_in.read(reinterpret_cast<char*>(&cir.k0), 8);
  cir_in.read(reinterpret_cast<char*>(&cir.dt), 8);
  cir_in.read(reinterpret_cast<char*>(&cir.bandwidth_hz), 8);
  cir_in.read(reinterpret_cast<char*>(&oversample), 8);
  cir_in.read(reinterpret_cast<char*>(&n), 8);
  cir.oversample = static_cast<int>(oversample);
  cir.taps.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    double re = 0, im = 0;
    cir_in.read(reinterpret_cast<char*>(&re), 8);
    cir_in.read(reinterpret_cast<char*>(&im), 8);
    cir.taps[i] = Complex(re, im);
  }
  if (!cir_in) throw std::runtime_error(cir_path.string() + ": truncated");
  return {rec, cir};
}

std::vector<HistogramRow> metric_histogram(const std::vector<double>& points,
                                           const std::vector<std::vector<double>>& values,
                                           int n_bins) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& per_point : values) {
    for (const double v : per_point) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::vector<HistogramRow> rows;
  if (!std::isfinite(lo)) return rows;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / n_bins;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<long> counts(n_bins, 0);
    for (const double v : values[p]) {
      if (!std::isfinite(v)) continue;
      const auto idx = std::clamp<long>(static_cast<long>(std::floor((v - lo) / width)), 0,
                                        n_bins - 1);
      ++counts[idx];
    }
    for (int b = 0; b < n_bins; ++b) {
      rows.push_back({points[p], canonical9(lo + b * width), canonical9(lo + (b + 1) * width),
                      counts[b]});
    }
  }
  return rows;
}

}  // namespace

std::uint64_t realization_seed(std::uint64_t global_seed, double point_value, int realization) {
  const std::uint64_t point_bits = std::bit_cast<std::uint64_t>(point_value);
  return derive_stream_seed(derive_stream_seed(global_seed, point_bits),
                            static_cast<std::uint64_t>(realization));
}

double canonical9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return std::strtod(buf, nullptr);
}

std::string format9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

RealizationOutput run_realization(const SweepConfig& config, double point_value, int realization,
                                  int tracer_threads) {
  config.validate();
  FoliageParams params = config.foliage;
  if (config.axis == SweepAxis::kRho) params.rho = point_value;
  if (config.axis == SweepAxis::kVTarget) params.v_target = point_value;
  params.validate();

  const std::uint64_t seed = realization_seed(config.seed, point_value, realization);
  params.seed = seed;
  const RandomStream root(seed);
  RandomStream envelope_rng = root.split(kEnvelopeStage);
  RandomStream fill_rng = root.split(kFillStage);
  RandomStream ray_rng = root.split(kRayStage);

  RealizationOutput out;
  out.record.point_value = canonical9(point_value);
  out.record.realization = realization;
  out.record.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Vec3d center = config.geometry.crown_center_or_default();
    TriMeshd envelope = generate_envelope(params, envelope_rng);
    ScattererSoupd soup = fill(envelope, params, fill_rng);
    out.envelope = translated(std::move(envelope), center);
    out.soup = translated(std::move(soup), center);

    Scene scene;
    scene.soup = out.soup;
    scene.tx = config.geometry.tx;
    scene.rx = config.geometry.rx;
    scene.material = config.material;
    scene.carrier_hz = config.carrier_hz;
    scene.ground = config.geometry.ground;

    TracerConfig tracer = config.tracer;
    tracer.seed = seed;
    tracer.n_threads = std::max(1, tracer_threads);
    out.mpcs = trace(scene, tracer, ray_rng);

    out.record.n_mpcs = static_cast<long>(out.mpcs.size());
    if (out.mpcs.empty()) {
      out.record.rss_dbm = -std::numeric_limits<double>::infinity();
      out.record.pl_db = std::numeric_limits<double>::infinity();
      out.record.drms_ns = std::numeric_limits<double>::quiet_NaN();
    } else {
      out.cir = shape_cir(out.mpcs, config.channel.bandwidth_hz, config.channel.oversample);
      const LinkBudget budget = path_loss(out.mpcs);
      const PowerDelayProfile pdp = average_pdp({out.cir});
      const double drms = rms_delay_spread(pdp, config.channel.noise_gate_db);
      out.record.rss_dbm = canonical9(budget.rss_dbm);
      out.record.pl_db = canonical9(budget.pl_db);
      out.record.drms_ns = canonical9(drms * 1e9);
    }
  } catch (const std::exception& err) {
    out.record.error = err.what();
    for (char& c : out.record.error) {
      if (c == ',' || c == '\n') c = ';';
    }
    out.record.rss_dbm = std::numeric_limits<double>::quiet_NaN();
    out.record.pl_db = std::numeric_limits<double>::quiet_NaN();
    out.record.drms_ns = std::numeric_limits<double>::quiet_NaN();
    out.record.n_mpcs = 0;
  }
  out.record.wall_time_s = canonical9(
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return out;
}

SweepAggregates aggregate(const std::vector<RealizationRecord>& records, int n_bins) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  if (n_bins < 1) throw std::invalid_argument("aggregate: n_bins must be >= 1");

  std::vector<double> points;
  std::vector<std::vector<const RealizationRecord*>> grouped;
  for (const auto& rec : records) {
    const auto it = std::find(points.begin(), points.end(), rec.point_value);
    std::size_t idx = static_cast<std::size_t>(it - points.begin());
    if (it == points.end()) {
      points.push_back(rec.point_value);
      grouped.emplace_back();
    }
    grouped[idx].push_back(&rec);
  }

  SweepAggregates agg;
  std::vector<std::vector<double>> drms_values(points.size());
  std::vector<std::vector<double>> rss_values(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& group = grouped[p];
    auto moments = [&](auto getter) {
      const double first = getter(*group.front());
      bool all_equal = true;
      double mean = 0.0;
      for (const auto* r : group) {
        all_equal = all_equal && (getter(*r) == first);
        mean += getter(*r);
      }
      if (all_equal) return std::pair<double, double>(first, 0.0);
      mean /= static_cast<double>(group.size());
      double var = 0.0;
      for (const auto* r : group) {
        const double d = getter(*r) - mean;
        var += d * d;
      }
      var /= static_cast<double>(group.size());
      return std::pair<double, double>(mean, std::sqrt(var));
    };
    const auto [rss_mean, rss_std] = moments([](const RealizationRecord& r) { return r.rss_dbm; });
    const auto [pl_mean, pl_std] = moments([](const RealizationRecord& r) { return r.pl_db; });
    const auto [drms_mean, drms_std] =
        moments([](const RealizationRecord& r) { return r.drms_ns; });
    agg.points.push_back({points[p], static_cast<int>(group.size()), canonical9(rss_mean),
                          canonical9(rss_std), canonical9(pl_mean), canonical9(pl_std),
                          canonical9(drms_mean), canonical9(drms_std)});
    for (const auto* r : group) {
      drms_values[p].push_back(r->drms_ns);
      rss_values[p].push_back(r->rss_dbm);
    }
  }
  agg.drms_hist = metric_histogram(points, drms_values, n_bins);
  agg.rss_hist = metric_histogram(points, rss_values, n_bins);
  return agg;
}

SweepOutput run_sweep(const SweepConfig& config, const fs::path& out_dir) {
  config.validate();
  const fs::path state_dir = out_dir / "state";
  fs::create_directories(state_dir);

  // refuse to resume someone else's output directory
  const fs::path manifest_path = out_dir / "manifest.json";
  const std::string manifest = manifest_json(config);
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    std::stringstream ss;
    ss << in.rdbuf();
    if (ss.str() != manifest) {
      throw std::runtime_error("run_sweep: " + out_dir.string() +
                               " holds results for a different configuration");
    }
  }

  const std::vector<double> points = config.sweep_points();
  const int n_points = static_cast<int>(points.size());
  const int n_real = config.realizations;

  struct Job {
    int point;
    int realization;
  };
  std::vector<Job> jobs;
  for (int p = 0; p < n_points; ++p) {
    for (int r = 0; r < n_real; ++r) {
      if (!state_exists(state_dir, p, r)) jobs.push_back({p, r});
    }
  }

  const int workers =
      std::max(1, std::min<int>(config.tracer.n_threads, static_cast<int>(jobs.size())));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure_message;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size() || failed.load()) return;
      const Job job = jobs[k];
      try {
        const RealizationOutput out = run_realization(config, points[job.point], job.realization);
        write_state(state_dir, job.point, job.realization, out);
      } catch (const std::exception& err) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        failure_message = err.what();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw std::runtime_error("run_sweep: " + failure_message);

  // assemble in deterministic (point, realization) order
  SweepOutput output;
  std::vector<std::vector<std::pair<int, ChannelImpulseResponse>>> cirs(n_points);
  for (int p = 0; p < n_points; ++p) {
    for (int r = 0; r < n_real; ++r) {
      auto [rec, cir] = load_state(state_dir, p, r);
      output.records.push_back(rec);
      if (cir.size() > 0) cirs[p].emplace_back(r, std::move(cir));
    }
  }
  output.aggregates = aggregate(output.records, config.histogram_bins);

  write_records_csv(output.records, out_dir / "records.csv");
  write_aggregates_csv(output.aggregates.points, out_dir / "aggregates.csv");
  write_histogram_csv(output.aggregates.drms_hist, out_dir / "histogram.csv");
  write_histogram_csv(output.aggregates.rss_hist, out_dir / "histogram_rss.csv");

  for (int p = 0; p < n_points; ++p) {
    if (cirs[p].empty()) continue;
    const std::string label = point_label(config, points[p]);
    std::vector<ChannelImpulseResponse> point_cirs;
    point_cirs.reserve(cirs[p].size());
    for (const auto& [r, cir] : cirs[p]) point_cirs.push_back(cir);
    const PowerDelayProfile pdp = average_pdp(point_cirs);
    write_pdp_csv(pdp, out_dir / ("pdp" + label + ".csv"));
    write_cdf_csv(empirical_cdf(pdp_bins_dbm_above_gate(pdp, config.channel.noise_gate_db)),
                  out_dir / ("cdf" + label + ".csv"));

    // per-realization CIR distributions, long format
    auto f = open_out(out_dir / ("cir_cdf" + label + ".csv"));
    f << "realization,value_dbm,prob\n";
    for (const auto& [r, cir] : cirs[p]) {
      PowerDelayProfile single = average_pdp({cir});
      const auto cdf =
          empirical_cdf(pdp_bins_dbm_above_gate(single, config.channel.noise_gate_db));
      for (const auto& [value, prob] : cdf) {
        f << r << ',' << format9(value) << ',' << format9(prob) << '\n';
      }
    }
  }

  if (!fs::exists(manifest_path)) {
    auto f = open_out(manifest_path);
    f << manifest;
  }
  return output;
}

void write_records_csv(const std::vector<RealizationRecord>& records, const fs::path& path) {
  auto f = open_out(path);
  f << "point_value,realization,seed,rss_dbm,pl_db,drms_ns,n_mpcs\n";
  for (const auto& r : records) {
    f << format9(r.point_value) << ',' << r.realization << ',' << r.seed << ','
      << format9(r.rss_dbm) << ',' << format9(r.pl_db) << ',' << format9(r.drms_ns) << ','
      << r.n_mpcs << '\n';
  }
}

std::vector<RealizationRecord> read_records_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "point_value,realization,seed,rss_dbm,pl_db,drms_ns,n_mpcs") {
    throw std::runtime_error(path.string() + ": unexpected records.csv header");
  }
  std::vector<RealizationRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) throw std::runtime_error(path.string() + ": malformed row");
    RealizationRecord r;
    r.point_value = parse_field_double(fields[0], path);
    r.realization = static_cast<int>(std::strtol(fields[1].c_str(), nullptr, 10));
    r.seed = std::strtoull(fields[2].c_str(), nullptr, 10);
    r.rss_dbm = parse_field_double(fields[3], path);
    r.pl_db = parse_field_double(fields[4], path);
    r.drms_ns = parse_field_double(fields[5], path);
    r.n_mpcs = std::strtol(fields[6].c_str(), nullptr, 10);
    records.push_back(r);
  }
  return records;
}

void write_aggregates_csv(const std::vector<PointAggregate>& points, const fs::path& path) {
  auto f = open_out(path);
  f << "point_value,realizations,mean_rss_dbm,std_rss_dbm,mean_pl_db,std_pl_db,"
       "mean_drms_ns,std_drms_ns\n";
  for (const auto& p : points) {
    f << format9(p.point_value) << ',' << p.realizations << ',' << format9(p.mean_rss_dbm) << ','
      << format9(p.std_rss_dbm) << ',' << format9(p.mean_pl_db) << ',' << format9(p.std_pl_db)
      << ',' << format9(p.mean_drms_ns) << ',' << format9(p.std_drms_ns) << '\n';
  }
}

void write_histogram_csv(const std::vector<HistogramRow>& rows, const fs::path& path) {
  auto f = open_out(path);
  f << "point_value,bin_lo,bin_hi,count\n";
  for (const auto& r : rows) {
    f << format9(r.point_value) << ',' << format9(r.bin_lo) << ',' << format9(r.bin_hi) << ','
      << r.count << '\n';
  }
}

void write_mpcs_csv(const std::vector<MultipathComponent>& mpcs, const fs::path& path) {
  auto f = open_out(path);
  f << "path_id,delay_s,amp_re,amp_im,n_interactions,kind\n";
  for (std::size_t i = 0; i < mpcs.size(); ++i) {
    const auto& m = mpcs[i];
    f << i << ',' << format17(m.delay) << ',' << format17(m.amplitude.real()) << ','
      << format17(m.amplitude.imag()) << ',' << m.interaction_count << ',' << to_string(m.kind)
      << '\n';
  }
}

void write_cir_csv(const ChannelImpulseResponse& cir, const fs::path& path) {
  auto f = open_out(path);
  f << "delay_ns,amp_re,amp_im\n";
  for (std::int64_t i = 0; i < cir.size(); ++i) {
    f << format9(cir.delay(i) * 1e9) << ',' << format9(cir.taps[i].real()) << ','
      << format9(cir.taps[i].imag()) << '\n';
  }
}

void write_pdp_csv(const PowerDelayProfile& pdp, const fs::path& path) {
  auto f = open_out(path);
  f << "delay_ns,power_dbm\n";
  for (std::int64_t i = 0; i < pdp.size(); ++i) {
    const double p = pdp.power[i];
    const double dbm = p > 0.0 ? 10.0 * std::log10(p) : -std::numeric_limits<double>::infinity();
    f << format9(pdp.delay(i) * 1e9) << ',' << format9(dbm) << '\n';
  }
}

void write_cdf_csv(const std::vector<std::pair<double, double>>& cdf, const fs::path& path) {
  auto f = open_out(path);
  f << "value_dbm,prob\n";
  for (const auto& [value, prob] : cdf) {
    f << format9(value) << ',' << format9(prob) << '\n';
  }
}

std::string manifest_json(const SweepConfig& config) {
  nlohmann::json j;
  j["tool"] = "canopy";
  j["version"] = kToolVersion;
  j["rng"] = kRngScheme;
  j["foliage"] = {{"v_target", config.foliage.v_target}, {"sigma", config.foliage.sigma},
                  {"n_subdiv", config.foliage.n_subdiv}, {"rho", config.foliage.rho},
                  {"area", config.foliage.area}};
  j["material"] = {{"eps_r", config.material.eps_r}, {"kappa", config.material.kappa},
                   {"mu_s", config.material.mu_s}};
  const Vec3d crown = config.geometry.crown_center_or_default();
  j["geometry"] = {{"tx", {config.geometry.tx.x(), config.geometry.tx.y(), config.geometry.tx.z()}},
                   {"rx", {config.geometry.rx.x(), config.geometry.rx.y(), config.geometry.rx.z()}},
                   {"crown_center", {crown.x(), crown.y(), crown.z()}},
                   {"ground_enabled", config.geometry.ground.enabled},
                   {"ground_height", config.geometry.ground.height},
                   {"ground_eps_r", config.geometry.ground.material.eps_r},
                   {"ground_kappa", config.geometry.ground.material.kappa},
                   {"ground_mu_s", config.geometry.ground.material.mu_s}};
  j["channel"] = {{"carrier_hz", config.carrier_hz},
                  {"bandwidth_hz", config.channel.bandwidth_hz},
                  {"oversample", config.channel.oversample},
                  {"noise_gate_db", config.channel.noise_gate_db}};
  j["tracer"] = {{"candidate_rays", config.tracer.n_candidate_rays},
                 {"max_depth", config.tracer.max_depth},
                 {"rx_sphere_growth", config.tracer.rx_sphere_growth},
                 {"enable_diffuse", config.tracer.enable_diffuse}};
  j["sweep"] = {{"axis", std::string(to_string(config.axis))},
                {"values", config.values},
                {"realizations", config.realizations},
                {"seed", config.seed},
                {"bins", config.histogram_bins}};
  return j.dump(2) + "\n";
}

void write_manifest(const SweepConfig& config, const fs::path& path) {
  auto f = open_out(path);
  f << manifest_json(config);
}

}  // namespace canopy
