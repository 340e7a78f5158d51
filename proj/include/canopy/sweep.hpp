// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "canopy/channel.hpp"
#include "canopy/config.hpp"
#include "canopy/mesh.hpp"
#include "canopy/scatter.hpp"

namespace canopy {

/// Per-realization result row. Floating fields are canonicalized to 9
/// significant digits at creation, so the emitted CSVs and every statistic
/// recomputed from them agree exactly.
struct RealizationRecord {
  double point_value = 0.0;
  int realization = 0;
  std::uint64_t seed = 0;
  double rss_dbm = 0.0;
  double pl_db = 0.0;
  double drms_ns = 0.0;
  long n_mpcs = 0;
  double wall_time_s = 0.0;  // diagnostics; kept out of records.csv
  std::string error;         // nonempty for failed realizations
};

struct PointAggregate {
  double point_value = 0.0;
  int realizations = 0;
  double mean_rss_dbm = 0.0, std_rss_dbm = 0.0;
  double mean_pl_db = 0.0, std_pl_db = 0.0;
  double mean_drms_ns = 0.0, std_drms_ns = 0.0;
};

struct HistogramRow {
  double point_value = 0.0;
  double bin_lo = 0.0, bin_hi = 0.0;
  long count = 0;
};

struct SweepAggregates {
  std::vector<PointAggregate> points;
  std::vector<HistogramRow> drms_hist;  // histogram.csv
  std::vector<HistogramRow> rss_hist;   // histogram_rss.csv
};

struct SweepOutput {
  std::vector<RealizationRecord> records;  // ordered by (point, realization)
  SweepAggregates aggregates;
};

/// Derived per-realization seed. Depends only on the global seed, the swept
/// point value (bit pattern) and the realization index, so adding or
/// reordering sweep points never changes the other points' results.
std::uint64_t realization_seed(std::uint64_t global_seed, double point_value, int realization);

/// Round a double through its 9-significant-digit decimal representation.
double canonical9(double x);
std::string format9(double x);

struct RealizationOutput {
  RealizationRecord record;
  std::vector<MultipathComponent> mpcs;
  ChannelImpulseResponse cir;  // size 0 when the path list is empty
  TriMeshd envelope;           // world coordinates
  ScattererSoupd soup;
};

/// Generate -> fill -> trace -> statistics for one (point, realization) pair.
/// tracer_threads parallelizes the candidate-ray loop (results are identical
/// for any value); sweeps keep it at 1 and parallelize across realizations.
RealizationOutput run_realization(const SweepConfig& config, double point_value, int realization,
                                  int tracer_threads = 1);

/// Full sweep with resumable per-realization state under out_dir/state/ and
/// the CSV outputs described in the README. Worker threads come from
/// config.tracer.n_threads; each realization's tracer runs single-threaded,
/// and outputs are byte-identical for any thread count.
SweepOutput run_sweep(const SweepConfig& config, const std::filesystem::path& out_dir);

/// Per-point mean/std and heatmap histograms over the finite record values.
SweepAggregates aggregate(const std::vector<RealizationRecord>& records, int n_bins);

void write_records_csv(const std::vector<RealizationRecord>& records,
                       const std::filesystem::path& path);
std::vector<RealizationRecord> read_records_csv(const std::filesystem::path& path);
void write_aggregates_csv(const std::vector<PointAggregate>& points,
                          const std::filesystem::path& path);
void write_histogram_csv(const std::vector<HistogramRow>& rows,
                         const std::filesystem::path& path);
void write_mpcs_csv(const std::vector<MultipathComponent>& mpcs,
                    const std::filesystem::path& path);
void write_cir_csv(const ChannelImpulseResponse& cir, const std::filesystem::path& path);
void write_pdp_csv(const PowerDelayProfile& pdp, const std::filesystem::path& path);
void write_cdf_csv(const std::vector<std::pair<double, double>>& cdf,
                   const std::filesystem::path& path);

/// Resolved-config manifest (JSON); also guards resumed runs against a
/// mismatched configuration.
std::string manifest_json(const SweepConfig& config);
void write_manifest(const SweepConfig& config, const std::filesystem::path& path);

}  // namespace canopy
