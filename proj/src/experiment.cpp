#include "mcsync/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <system_error>

#include <fmt/format.h>

#include "mcsync/parallel.hpp"
#include "mcsync/random.hpp"

namespace mcsync {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ArrivalSeries synthesize(const ExperimentConfig& cfg, const EmissionSchedule& schedule, std::uint64_t seed,
                         unsigned inner_threads) {
  // The fixed clock reads K nominal windows even when jitter shortened the sequence.
  const double nominal_end = static_cast<double>(cfg.tx.n_symbols) * cfg.tx.symbol_duration_s;
  const double horizon = std::max(schedule.end_time(), nominal_end) + 2.0 * cfg.tx.symbol_duration_s;
  if (cfg.backend == Backend::Particle) {
    return synthesize_arrivals_particle(schedule, cfg.geometry, cfg.molecules, cfg.bin_width_s, horizon, seed,
                                        ParticleOverrides{cfg.particle_dt_s, inner_threads});
  }
  return synthesize_arrivals(schedule, cfg.geometry, cfg.molecules, cfg.bin_width_s, horizon, seed);
}

Realization realize_with(const ExperimentConfig& cfg, std::int64_t run_index, unsigned inner_threads) {
  const RunSeeds seeds = run_seeds(cfg.seed_base, run_index);
  TxConfig tx = cfg.tx;
  tx.seed = seeds.tx;
  Realization out;
  out.bits = generate_symbols(tx);
  const auto durations = draw_symbol_durations(tx);
  out.schedule = build_emission_schedule(out.bits, durations, tx);
  out.clean = synthesize(cfg, out.schedule, seeds.channel, inner_threads);
  return out;
}

ArrivalSeries noisy_series(const ExperimentConfig& cfg, const Realization& realization, std::int64_t run_index) {
  if (!cfg.noise.enabled()) {
    return realization.clean;
  }
  NoiseConfig noise = cfg.noise;
  noise.seed = run_seeds(cfg.seed_base, run_index).noise;
  ArrivalSeries s = add_counting_noise(realization.clean, cfg.geometry, cfg.molecules.info, cfg.tx.n_info, noise);
  return add_counting_noise(s, cfg.geometry, cfg.molecules.sync, cfg.tx.n_sync, noise);
}

SyncEstimate estimate(const ExperimentConfig& cfg, const ArrivalSeries& series, std::int64_t run_index) {
  SyncEstimate est = estimate_sync_peaks(series, cfg.detector, cfg.geometry, cfg.molecules.sync, cfg.tx.n_sync,
                                         cfg.tx.symbol_duration_s, cfg.tx.n_symbols);
  if (cfg.e_bar_target > 0.0) {
    est = inject_sync_error(est, cfg.e_bar_target, cfg.tx.symbol_duration_s,
                            run_seeds(cfg.seed_base, run_index).inject);
  }
  return est;
}

// Peaks the fixed clock implicitly assumes: k T_s + t_pk.
SyncEstimate fixed_clock_estimate(const ExperimentConfig& cfg) {
  const double t_pk = peak_time(cfg.geometry, cfg.molecules.sync.diffusion_um2_s);
  std::vector<double> peaks(static_cast<std::size_t>(cfg.tx.n_symbols + 1));
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    peaks[k] = static_cast<double>(k) * cfg.tx.symbol_duration_s + t_pk;
  }
  return sync_estimate_from_peaks(std::move(peaks), std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.tx.n_symbols + 1), 0));
}

EyePair eyes(const ExperimentConfig& cfg, const Realization& realization, const ArrivalSeries& series,
             const SyncEstimate& est, double sample_fraction, std::int64_t n_points) {
  EyePair out;
  const auto& durations = realization.schedule.durations;
  out.span_s = *std::min_element(durations.begin(), durations.end());
  std::vector<double> fixed_starts(durations.size());
  for (std::size_t k = 0; k < fixed_starts.size(); ++k) {
    fixed_starts[k] = static_cast<double>(k) * cfg.tx.symbol_duration_s;
  }
  out.proposed = eye_diagram(series, est.info_start_s, realization.bits, out.span_s, sample_fraction,
                             cfg.tx.n_info, n_points);
  out.baseline = eye_diagram(series, fixed_starts, realization.bits, out.span_s, sample_fraction, cfg.tx.n_info,
                             n_points);
  return out;
}

double mean_of(std::span<const RunOutcome> outcomes, double (*field)(const RunOutcome&)) {
  double s = 0.0;
  for (const auto& o : outcomes) s += field(o);
  return s / static_cast<double>(outcomes.size());
}

double stderr_of(std::span<const RunOutcome> outcomes, double (*field)(const RunOutcome&)) {
  const std::size_t n = outcomes.size();
  if (n < 2) {
    return 0.0;
  }
  const double m = mean_of(outcomes, field);
  double ss = 0.0;
  for (const auto& o : outcomes) ss += (field(o) - m) * (field(o) - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace

RunSeeds run_seeds(std::uint64_t seed_base, std::int64_t run_index) {
  const auto r = static_cast<std::uint64_t>(run_index);
  return {derive_seed(seed_base, {r, 1}), derive_seed(seed_base, {r, 2}), derive_seed(seed_base, {r, 3}),
          derive_seed(seed_base, {r, 4})};
}

Realization realize(const ExperimentConfig& cfg, std::int64_t run_index) {
  cfg.validate();
  return realize_with(cfg, run_index, cfg.threads);
}

RunOutcome evaluate(const ExperimentConfig& cfg, const Realization& realization, std::int64_t run_index) {
  const ArrivalSeries series = noisy_series(cfg, realization, run_index);
  const SyncEstimate est = estimate(cfg, series, run_index);
  const double threshold = decision_threshold(cfg.threshold, cfg.tx.n_info, cfg.geometry, cfg.molecules.info,
                                              cfg.tx.symbol_duration_s);
  const auto& truth = realization.schedule;

  RunOutcome out;
  out.run_index = run_index;
  out.threshold = threshold;
  out.reordered = est.reordered;

  const SymbolSequence synced = detect_symbols_synced(series, est, threshold);
  const SymbolSequence fixed = detect_symbols_fixed(series, cfg.tx.symbol_duration_s, cfg.tx.n_symbols, threshold);

  out.proposed.ser = symbol_error_rate(realization.bits, synced);
  out.proposed.e_bar = normalized_sync_error(est, truth.symbol_starts, cfg.geometry,
                                             cfg.molecules.sync.diffusion_um2_s, truth.durations);
  out.proposed.erasure_rate = est.erasure_rate();
  out.proposed.e_bar_flagged = out.proposed.e_bar > 1.0;
  out.proposed.n_symbols = cfg.tx.n_symbols;

  out.baseline.ser = symbol_error_rate(realization.bits, fixed);
  out.baseline.e_bar = normalized_sync_error(fixed_clock_estimate(cfg), truth.symbol_starts, cfg.geometry,
                                             cfg.molecules.sync.diffusion_um2_s, truth.durations);
  out.baseline.n_symbols = cfg.tx.n_symbols;

  out.proposed.eye_height = out.proposed.eye_width = kNaN;
  out.baseline.eye_height = out.baseline.eye_width = kNaN;
  if (cfg.compute_eye) {
    try {
      const EyePair e = eyes(cfg, realization, series, est, 1.0, 200);
      out.proposed.eye_height = e.proposed.eye_height;
      out.proposed.eye_width = e.proposed.eye_width;
      out.baseline.eye_height = e.baseline.eye_height;
      out.baseline.eye_width = e.baseline.eye_width;
    } catch (const UndefinedEye&) {
      // all-zero or all-one sequence: eye stays NaN
    }
  }
  return out;
}

RunOutcome run_single(const ExperimentConfig& cfg, std::int64_t run_index) {
  return evaluate(cfg, realize(cfg, run_index), run_index);
}

std::vector<RunOutcome> run_batch(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RunOutcome> out(static_cast<std::size_t>(cfg.runs));
  const unsigned inner = cfg.runs == 1 ? cfg.threads : 1;
  parallel_for(cfg.runs, cfg.threads, [&](std::int64_t i) {
    out[static_cast<std::size_t>(i)] = evaluate(cfg, realize_with(cfg, i, inner), i);
  });
  return out;
}

ResultRow aggregate(const ExperimentConfig& cfg, std::span<const RunOutcome> outcomes, double sweep_value) {
  if (outcomes.empty()) {
    throw std::invalid_argument("aggregate needs at least one run");
  }
  ResultRow row;
  row.sweep_parameter = cfg.sweep ? std::string(to_string(cfg.sweep->parameter)) : "none";
  row.sweep_value = sweep_value;
  row.ser_proposed = mean_of(outcomes, [](const RunOutcome& o) { return o.proposed.ser; });
  row.ser_proposed_stderr = stderr_of(outcomes, [](const RunOutcome& o) { return o.proposed.ser; });
  row.ser_baseline = mean_of(outcomes, [](const RunOutcome& o) { return o.baseline.ser; });
  row.ser_baseline_stderr = stderr_of(outcomes, [](const RunOutcome& o) { return o.baseline.ser; });
  row.e_bar = mean_of(outcomes, [](const RunOutcome& o) { return o.proposed.e_bar; });
  row.erasure_rate = mean_of(outcomes, [](const RunOutcome& o) { return o.proposed.erasure_rate; });
  row.runs = static_cast<std::int64_t>(outcomes.size());
  row.symbols_per_run = cfg.tx.n_symbols;
  row.threshold_rule = std::string(to_string(cfg.threshold));
  row.threshold = outcomes.front().threshold;
  row.fingerprint = fingerprint(cfg);
  return row;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.sweep) {
    const auto outcomes = run_batch(cfg);
    return {aggregate(cfg, outcomes, kNaN)};
  }
  const auto& values = cfg.sweep->values;
  const bool shared = cfg.sweep->parameter != SweepParameter::Sigma2Symbol;
  std::vector<ExperimentConfig> point(values.size(), cfg);
  for (std::size_t v = 0; v < values.size(); ++v) {
    point[v].apply(cfg.sweep->parameter, values[v]);
  }
  std::vector<std::vector<RunOutcome>> outcomes(values.size(), std::vector<RunOutcome>(static_cast<std::size_t>(cfg.runs)));
  const unsigned inner = cfg.runs == 1 ? cfg.threads : 1;
  parallel_for(cfg.runs, cfg.threads, [&](std::int64_t i) {
    const auto r = static_cast<std::size_t>(i);
    if (shared) {
      const Realization base = realize_with(point.front(), i, inner);
      for (std::size_t v = 0; v < values.size(); ++v) {
        outcomes[v][r] = evaluate(point[v], base, i);
      }
    } else {
      for (std::size_t v = 0; v < values.size(); ++v) {
        outcomes[v][r] = evaluate(point[v], realize_with(point[v], i, inner), i);
      }
    }
  });
  std::vector<ResultRow> rows;
  for (std::size_t v = 0; v < values.size(); ++v) {
    rows.push_back(aggregate(cfg, outcomes[v], values[v]));
  }
  return rows;
}

void write_results_csv(std::span<const ResultRow> rows, std::ostream& out) {
  out << "sweep_parameter,sweep_value,ser_proposed,ser_proposed_stderr,ser_baseline,ser_baseline_stderr,"
         "e_bar,erasure_rate,runs,symbols_per_run,threshold_rule,threshold,config_fingerprint\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{},{:.17g},{}\n",
                       r.sweep_parameter, r.sweep_value, r.ser_proposed, r.ser_proposed_stderr, r.ser_baseline,
                       r.ser_baseline_stderr, r.e_bar, r.erasure_rate, r.runs, r.symbols_per_run, r.threshold_rule,
                       r.threshold, r.fingerprint);
  }
}

void write_runs_csv(std::span<const RunOutcome> outcomes, std::ostream& out) {
  out << "run_index,ser_proposed,ser_baseline,e_bar,erasure_rate,reordered,eye_height_proposed,"
         "eye_width_proposed_s,eye_height_baseline,eye_width_baseline_s\n";
  for (const auto& o : outcomes) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", o.run_index,
                       o.proposed.ser, o.baseline.ser, o.proposed.e_bar, o.proposed.erasure_rate, o.reordered,
                       o.proposed.eye_height, o.proposed.eye_width, o.baseline.eye_height, o.baseline.eye_width);
  }
}

void write_channel_curves(const ChannelGeometry& geom, std::span<const double> diffusions, double t_max_s,
                          double dt_s, std::ostream& out) {
  geom.validate();
  if (!(dt_s > 0.0) || !(t_max_s >= 0.0) || !std::isfinite(t_max_s)) {
    throw std::invalid_argument("curve grid needs dt > 0 and finite t_max >= 0");
  }
  const auto n = static_cast<std::int64_t>(std::floor(t_max_s / dt_s + 1e-9));
  out << "D_um2_s,t_s,hitting_rate,hitting_fraction\n";
  for (double D : diffusions) {
    for (std::int64_t i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) * dt_s;
      out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", D, t, hitting_rate(geom, D, t),
                         hitting_fraction(geom, D, t));
    }
  }
}

EyePair eye_pair(const ExperimentConfig& cfg, const Realization& realization, std::int64_t run_index,
                 double sample_fraction, std::int64_t n_points) {
  const ArrivalSeries series = noisy_series(cfg, realization, run_index);
  const SyncEstimate est = estimate(cfg, series, run_index);
  return eyes(cfg, realization, series, est, sample_fraction, n_points);
}

void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error(fmt::format("cannot write '{}'", tmp.string()));
    }
    out << content;
    out.flush();
    if (!out) {
      throw std::runtime_error(fmt::format("write to '{}' failed", tmp.string()));
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mcsync
