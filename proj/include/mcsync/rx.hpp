#pragma once

// Receiver side: channel application (arrival synthesis with full ISI),
// additive counting noise, sync-peak estimation and the two bit detectors.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mcsync/arrival_series.hpp"
#include "mcsync/channel_model.hpp"
#include "mcsync/tx.hpp"

namespace mcsync {

struct NoiseConfig {
  double snr_db = std::numeric_limits<double>::infinity();  // +inf disables noise
  std::uint64_t seed = 1;
  ClampMode clamp = ClampMode::CarryDeficit;

  void validate() const;
  bool enabled() const noexcept { return snr_db != std::numeric_limits<double>::infinity(); }
};

struct DetectorConfig {
  std::int64_t smooth_window = 4000;  // bins in the centered moving average
  double gate_fraction = 0.5;         // of the expected smoothed peak height
  double refractory_fraction = 0.4;   // of T_s, minimum spacing between peaks; below the shortest symbol (0.5 T_s)
  double search_horizon = 1.5;        // of T_s, end of the search window after the previous peak

  void validate() const;
};

enum class ThresholdRule {
  Literal,     // N_info / 2
  Calibrated,  // N_info * F_info(T_s) / 2
};

double decision_threshold(ThresholdRule rule, std::int64_t n_info, const ChannelGeometry& geom,
                          const MoleculeSpec& info, double symbol_duration_s);

/// Per-symbol synchronization result. Entry k describes symbol k; the window of
/// the last symbol closes at `lookahead_peak_s`, the (K+1)-th detected peak.
struct SyncEstimate {
  std::vector<double> sync_peak_s;
  std::vector<double> info_start_s;  // equals sync_peak_s
  std::vector<double> duration_s;    // next peak minus this peak, > 0
  std::vector<std::uint8_t> erasure;  // 1 where the peak fell back to nominal spacing
  double lookahead_peak_s = 0.0;
  bool lookahead_erasure = false;
  std::int64_t reordered = 0;  // adjacent order violations repaired after perturbation

  std::size_t size() const noexcept { return sync_peak_s.size(); }
  double erasure_rate() const noexcept;
};

/// Builds a consistent estimate from K + 1 ordered peak times.
SyncEstimate sync_estimate_from_peaks(std::vector<double> peaks, std::vector<std::uint8_t> erasure);

class SeriesTooShort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source of absolute-time-independent hit times for one release event.
class HitTimeSource {
 public:
  virtual ~HitTimeSource() = default;
  /// Appends the absorption delays (seconds after release, < t_max) of `count`
  /// molecules of the given species.
  virtual void sample(const MoleculeSpec& spec, std::int64_t count, double t_max, std::uint64_t seed,
                      std::vector<double>& delays) const = 0;
};

/// Inverse-CDF draws from the closed-form hitting distribution.
class AnalyticHitSource final : public HitTimeSource {
 public:
  explicit AnalyticHitSource(ChannelGeometry geom) : geom_(geom) {}
  void sample(const MoleculeSpec& spec, std::int64_t count, double t_max, std::uint64_t seed,
              std::vector<double>& delays) const override;

 private:
  ChannelGeometry geom_;
};

struct ParticleOverrides {
  double dt_s = 1e-5;
  unsigned threads = 1;
};

/// Per-event particle random walks.
class ParticleHitSource final : public HitTimeSource {
 public:
  ParticleHitSource(ChannelGeometry geom, ParticleOverrides overrides) : geom_(geom), overrides_(overrides) {}
  void sample(const MoleculeSpec& spec, std::int64_t count, double t_max, std::uint64_t seed,
              std::vector<double>& delays) const override;

 private:
  ChannelGeometry geom_;
  ParticleOverrides overrides_;
};

/// Every molecule of every release event gets its own absorption time (or
/// none); hits inside [0, horizon) are binned per type. Event j draws from
/// stream (seed, j). Requires horizon >= schedule end + 2 T_s.
ArrivalSeries synthesize_arrivals(const EmissionSchedule& schedule, const HitTimeSource& source,
                                  const MoleculePair& molecules, double bin_width_s, double horizon_s,
                                  std::uint64_t seed);

ArrivalSeries synthesize_arrivals(const EmissionSchedule& schedule, const ChannelGeometry& geom,
                                  const MoleculePair& molecules, double bin_width_s, double horizon_s,
                                  std::uint64_t seed);

ArrivalSeries synthesize_arrivals_particle(const EmissionSchedule& schedule, const ChannelGeometry& geom,
                                           const MoleculePair& molecules, double bin_width_s, double horizon_s,
                                           std::uint64_t seed, ParticleOverrides overrides = {});

/// Expected count in the busiest bin after one isolated release of n molecules.
double expected_peak_bin_count(const ChannelGeometry& geom, double diffusion, std::int64_t n, double bin_width_s);

/// Per-bin noise deviation for the given SNR: (s_peak)^2 / sigma^2 = 10^(snr_db/10).
double noise_sigma(double peak_bin_count, double snr_db);

/// Adds i.i.d. zero-mean Gaussian noise to every bin of spec.type and keeps
/// bins non-negative according to noise.clamp.
ArrivalSeries add_counting_noise(const ArrivalSeries& series, const ChannelGeometry& geom, const MoleculeSpec& spec,
                                 std::int64_t n_per_symbol, const NoiseConfig& noise);

/// Locates K + 1 synchronization peaks (the last one closes symbol K - 1).
///
/// The sync counts are smoothed with a centered moving average, and the
/// expected smoothed tails of the pulses detected so far are subtracted. Each search
/// window spans [prev + refractory * T_s, prev + horizon * T_s). Within it the
/// earliest smoothed maximum above the gate is taken: when the global maximum
/// has another gated maximum at least one refractory interval before it, that
/// one wins, so two peaks inside one window never skip a symbol. The argmax of
/// the smoothed expected curve lags the true mode; that known lag is removed.
/// A window without a gated maximum falls back to prev + T_s and is flagged.
/// Throws SeriesTooShort if a fallback lands beyond the series.
SyncEstimate estimate_sync_peaks(const ArrivalSeries& series, const DetectorConfig& det, const ChannelGeometry& geom,
                                 const MoleculeSpec& sync, std::int64_t n_sync, double symbol_duration_s,
                                 std::int64_t n_symbols);

/// Bit k is 1 iff the info count over [info_start[k], info_start[k] + T_hat[k]) exceeds threshold.
SymbolSequence detect_symbols_synced(const ArrivalSeries& series, const SyncEstimate& est, double threshold);

/// Bit k is 1 iff the info count over [k T_s, (k + 1) T_s) exceeds threshold.
/// Throws SeriesTooShort if the series ends before K T_s.
SymbolSequence detect_symbols_fixed(const ArrivalSeries& series, double symbol_duration_s, std::int64_t n_symbols,
                                    double threshold);

/// Perturbs every peak by N(0, sigma^2) with sigma = e_bar * T_s * sqrt(pi / 2),
/// so the mean absolute perturbation is e_bar * T_s. Order is restored by sorting.
SyncEstimate inject_sync_error(const SyncEstimate& est, double e_bar_target, double symbol_duration_s,
                               std::uint64_t seed);

}  // namespace mcsync
