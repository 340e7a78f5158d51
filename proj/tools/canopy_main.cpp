// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "canopy/config.hpp"
#include "canopy/mesh_io.hpp"
#include "canopy/sweep.hpp"
#include "canopy/version.hpp"

namespace {

namespace fs = std::filesystem;
using namespace canopy;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<int> threads;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "config file (see --help for keys)");
  cmd->add_option("--seed", opts.seed, "override the [sweep] seed");
  cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--threads", opts.threads,
                  "worker threads (CANOPY_THREADS overrides; default from config)");
  cmd->add_flag("--paper-scale", opts.paper_scale,
                "full-scale tracing: 2e6 candidate rays, depth 25");
}

SweepConfig load_config(const CommonOptions& opts) {
  SweepConfig config =
      opts.config_path.empty() ? SweepConfig{} : parse_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (opts.threads) config.tracer.n_threads = *opts.threads;
  if (const char* env = std::getenv("CANOPY_THREADS")) {
    config.tracer.n_threads = std::max(1, std::atoi(env));
  }
  if (opts.paper_scale) {
    config.tracer.n_candidate_rays = 2'000'000;
    config.tracer.max_depth = 25;
  }
  config.validate();
  return config;
}

int cmd_generate(const CommonOptions& opts, bool ply, bool merged) {
  const SweepConfig config = load_config(opts);
  const double point = config.sweep_points().front();
  const RealizationOutput out = run_realization(config, point, 0);
  if (!out.record.error.empty()) {
    std::cerr << "generate failed: " << out.record.error << "\n";
    return 1;
  }
  fs::create_directories(opts.out_dir);
  const fs::path dir(opts.out_dir);
  write_obj(out.envelope, dir / "envelope.obj");
  write_obj(out.soup.mesh, dir / "soup.obj");
  if (ply) {
    write_ply(out.envelope, dir / "envelope.ply");
    write_ply(out.soup.mesh, dir / "soup.ply");
  }
  if (merged) write_merged_obj(out.envelope, out.soup.mesh, dir / "merged.obj");
  write_manifest(config, dir / "manifest.json");
  std::cout << "envelope: " << out.envelope.vertex_count() << " vertices, "
            << out.envelope.face_count() << " faces\n"
            << "soup:     " << out.soup.count() << " triangles (seed " << out.record.seed
            << ")\n";
  return 0;
}

int cmd_trace(const CommonOptions& opts, bool export_meshes) {
  const SweepConfig config = load_config(opts);
  const double point = config.sweep_points().front();
  RealizationOutput out = run_realization(config, point, 0, config.tracer.n_threads);
  if (!out.record.error.empty()) {
    std::cerr << "trace failed: " << out.record.error << "\n";
    return 1;
  }
  fs::create_directories(opts.out_dir);
  const fs::path dir(opts.out_dir);
  write_mpcs_csv(out.mpcs, dir / "mpcs.csv");
  if (out.cir.size() > 0) {
    write_cir_csv(out.cir, dir / "cir.csv");
    const PowerDelayProfile pdp = average_pdp({out.cir});
    write_pdp_csv(pdp, dir / "pdp.csv");
    write_cdf_csv(empirical_cdf(pdp_bins_dbm_above_gate(pdp, config.channel.noise_gate_db)),
                  dir / "cdf.csv");
  }
  if (export_meshes) {
    write_obj(out.envelope, dir / "envelope.obj");
    write_obj(out.soup.mesh, dir / "soup.obj");
  }
  nlohmann::json summary = {
      {"seed", out.record.seed},
      {"params",
       {{"v_target", config.axis == SweepAxis::kVTarget ? point : config.foliage.v_target},
        {"sigma", config.foliage.sigma},
        {"n_subdiv", config.foliage.n_subdiv},
        {"rho", config.axis == SweepAxis::kRho ? point : config.foliage.rho},
        {"area", config.foliage.area}}},
      {"rss_dbm", out.record.rss_dbm},
      {"pl_db", out.record.pl_db},
      {"drms_ns", out.record.drms_ns},
      {"n_mpcs", out.record.n_mpcs},
  };
  std::ofstream summary_out(dir / "summary.json");
  summary_out << summary.dump(2) << "\n";
  write_manifest(config, dir / "manifest.json");

  std::cout << "paths: " << out.record.n_mpcs << "  RSS " << out.record.rss_dbm << " dBm  PL "
            << out.record.pl_db << " dB  D_RMS " << out.record.drms_ns << " ns\n";
  return 0;
}

int cmd_sweep(const CommonOptions& opts) {
  const SweepConfig config = load_config(opts);
  const SweepOutput output = run_sweep(config, opts.out_dir);
  int failures = 0;
  for (const auto& rec : output.records) {
    if (!rec.error.empty()) {
      ++failures;
      std::cerr << "point " << rec.point_value << " realization " << rec.realization
                << " failed: " << rec.error << "\n";
    }
  }
  std::cout << output.records.size() << " records -> " << opts.out_dir << "/records.csv";
  if (failures > 0) std::cout << " (" << failures << " failed)";
  std::cout << "\n";
  for (const auto& p : output.aggregates.points) {
    std::cout << "  point " << p.point_value << ": PL " << p.mean_pl_db << " dB, D_RMS "
              << p.mean_drms_ns << " ns (n=" << p.realizations << ")\n";
  }
  return failures == 0 ? 0 : 1;
}

int cmd_aggregate(const std::string& records_path, const std::string& out_dir, int bins) {
  const auto records = read_records_csv(records_path);
  const SweepAggregates agg = aggregate(records, bins);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_aggregates_csv(agg.points, dir / "aggregates.csv");
  write_histogram_csv(agg.drms_hist, dir / "histogram.csv");
  write_histogram_csv(agg.rss_hist, dir / "histogram_rss.csv");

  // a sweep-emitted aggregates.csv next to the records must recompute exactly
  const fs::path sibling = fs::path(records_path).parent_path() / "aggregates.csv";
  if (fs::exists(sibling) && !fs::equivalent(sibling, dir / "aggregates.csv")) {
    std::ifstream a(sibling), b(dir / "aggregates.csv");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    if (sa.str() != sb.str()) {
      std::cerr << "error: " << sibling
                << " does not match the statistics recomputed from " << records_path
                << " (records edited by hand?)\n";
      return 1;
    }
  }
  std::cout << agg.points.size() << " sweep points aggregated -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("canopy ") + kToolVersion +
               " - stochastic tree-crown scattering and 80 GHz channel simulation"};
  app.require_subcommand(1);
  app.footer(config_reference());

  CommonOptions generate_opts, trace_opts, sweep_opts;
  bool ply = false, merged = false, export_meshes = false;

  CLI::App* generate = app.add_subcommand("generate", "generate and export crown meshes");
  add_common(generate, generate_opts);
  generate->add_flag("--ply", ply, "also write binary PLY meshes");
  generate->add_flag("--merged", merged, "write a merged soup + envelope wireframe OBJ");

  CLI::App* trace_cmd =
      app.add_subcommand("trace", "trace one realization and dump MPC/CIR/PDP/CDF files");
  add_common(trace_cmd, trace_opts);
  trace_cmd->add_flag("--export-meshes", export_meshes, "also write the generated meshes");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run a seeded multi-realization parameter sweep");
  add_common(sweep_cmd, sweep_opts);

  std::string records_path, agg_out = ".";
  int agg_bins = 20;
  CLI::App* agg_cmd =
      app.add_subcommand("aggregate", "recompute statistics and histograms from records.csv");
  agg_cmd->add_option("--records", records_path, "records.csv produced by sweep")->required();
  agg_cmd->add_option("--out", agg_out, "output directory")->capture_default_str();
  agg_cmd->add_option("--bins", agg_bins, "histogram bins")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(generate_opts, ply, merged);
    if (trace_cmd->parsed()) return cmd_trace(trace_opts, export_meshes);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts);
    if (agg_cmd->parsed()) return cmd_aggregate(records_path, agg_out, agg_bins);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
