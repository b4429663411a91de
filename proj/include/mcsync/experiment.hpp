#pragma once

// Monte Carlo driver: one run is Tx -> channel -> noise -> sync estimation ->
// both detectors -> metrics. Sweeps repeat runs over one swept parameter.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mcsync/arrival_series.hpp"
#include "mcsync/config.hpp"
#include "mcsync/metrics.hpp"
#include "mcsync/rx.hpp"
#include "mcsync/tx.hpp"

namespace mcsync {

/// Transmitted sequence and its noise-free arrivals.
struct Realization {
  SymbolSequence bits;
  EmissionSchedule schedule;
  ArrivalSeries clean;
};

struct RunOutcome {
  std::int64_t run_index = 0;
  MetricsReport proposed;
  MetricsReport baseline;  // e_bar of the fixed clock against the true starts
  double threshold = 0.0;
  std::int64_t reordered = 0;
};

/// Seeds of run i, all derived from (seed_base, i).
struct RunSeeds {
  std::uint64_t tx;
  std::uint64_t channel;
  std::uint64_t noise;
  std::uint64_t inject;
};
RunSeeds run_seeds(std::uint64_t seed_base, std::int64_t run_index);

Realization realize(const ExperimentConfig& cfg, std::int64_t run_index);
RunOutcome evaluate(const ExperimentConfig& cfg, const Realization& realization, std::int64_t run_index);
RunOutcome run_single(const ExperimentConfig& cfg, std::int64_t run_index);

/// All cfg.runs runs at cfg's own parameter values, ordered by run index.
std::vector<RunOutcome> run_batch(const ExperimentConfig& cfg);

struct ResultRow {
  std::string sweep_parameter;  // "none" without a sweep
  double sweep_value = 0.0;
  double ser_proposed = 0.0;
  double ser_proposed_stderr = 0.0;
  double ser_baseline = 0.0;
  double ser_baseline_stderr = 0.0;
  double e_bar = 0.0;
  double erasure_rate = 0.0;
  std::int64_t runs = 0;
  std::int64_t symbols_per_run = 0;
  std::string threshold_rule;
  double threshold = 0.0;
  std::string fingerprint;
};

ResultRow aggregate(const ExperimentConfig& cfg, std::span<const RunOutcome> outcomes, double sweep_value);

/// One row per sweep value (a single row without a sweep). Noise-free arrivals
/// are shared across sweep values unless sigma2_symbol is swept.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg);

void write_results_csv(std::span<const ResultRow> rows, std::ostream& out);
void write_runs_csv(std::span<const RunOutcome> outcomes, std::ostream& out);

/// f(t) and F(t) on the grid t = 0, dt, ..., t_max for each diffusion coefficient.
/// Header `D_um2_s,t_s,hitting_rate,hitting_fraction`.
void write_channel_curves(const ChannelGeometry& geom, std::span<const double> diffusions, double t_max_s,
                          double dt_s, std::ostream& out);

/// Eye diagrams of run 0 under the synced and the fixed-clock alignment, both
/// over the shortest true symbol duration and sampled at sample_fraction.
struct EyePair {
  EyeDiagram proposed;
  EyeDiagram baseline;
  double span_s = 0.0;
};
EyePair eye_pair(const ExperimentConfig& cfg, const Realization& realization, std::int64_t run_index,
                 double sample_fraction = 1.0, std::int64_t n_points = 200);

/// Writes content to path via a temporary file and rename.
void write_file_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace mcsync
