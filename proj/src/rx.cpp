#include "mcsync/rx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/random/normal_distribution.hpp>

#include "mcsync/brownian_engine.hpp"
#include "mcsync/random.hpp"

namespace mcsync {

namespace {

std::int64_t bins_in(double seconds, double bin_width) {
  return static_cast<std::int64_t>(std::llround(seconds / bin_width));
}

// Expected per-bin mean of the centered moving average at bin i after a
// release at t = 0.
struct SmoothedResponse {
  const ChannelGeometry& geom;
  double diffusion;
  double n;
  double bin_width;
  std::int64_t window;

  double operator()(std::int64_t bin) const {
    const std::int64_t first = bin - window / 2;
    const std::int64_t last = first + window;
    const auto cdf = [&](std::int64_t b) {
      return b <= 0 ? 0.0 : hitting_fraction(geom, diffusion, static_cast<double>(b) * bin_width);
    };
    return n * (cdf(last) - cdf(first)) / static_cast<double>(window);
  }
};

}  // namespace

void NoiseConfig::validate() const {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("noise: snr_db must be finite or +inf");
  }
}

void DetectorConfig::validate() const {
  if (smooth_window < 1) {
    throw std::invalid_argument("detector: smooth_window must be at least one bin");
  }
  if (!(gate_fraction > 0.0 && gate_fraction < 1.0)) {
    throw std::invalid_argument("detector: gate_fraction must lie in (0, 1)");
  }
  if (!(refractory_fraction > 0.0 && refractory_fraction < 1.0)) {
    throw std::invalid_argument("detector: refractory_fraction must lie in (0, 1)");
  }
  if (!(search_horizon > refractory_fraction) || !std::isfinite(search_horizon)) {
    throw std::invalid_argument("detector: search_horizon must exceed refractory_fraction");
  }
}

double decision_threshold(ThresholdRule rule, std::int64_t n_info, const ChannelGeometry& geom,
                          const MoleculeSpec& info, double symbol_duration_s) {
  const double n = static_cast<double>(n_info);
  switch (rule) {
    case ThresholdRule::Literal:
      return n / 2.0;
    case ThresholdRule::Calibrated:
      return n * hitting_fraction(geom, info.diffusion_um2_s, symbol_duration_s) / 2.0;
  }
  throw std::invalid_argument("unknown threshold rule");
}

double SyncEstimate::erasure_rate() const noexcept {
  if (erasure.empty()) {
    return 0.0;
  }
  return static_cast<double>(std::count(erasure.begin(), erasure.end(), 1)) / static_cast<double>(erasure.size());
}

SyncEstimate sync_estimate_from_peaks(std::vector<double> peaks, std::vector<std::uint8_t> erasure) {
  if (peaks.size() < 2 || erasure.size() != peaks.size()) {
    throw std::invalid_argument("sync estimate: need K + 1 peaks with matching erasure flags");
  }
  SyncEstimate est;
  const std::size_t k = peaks.size() - 1;
  est.lookahead_peak_s = peaks[k];
  est.lookahead_erasure = erasure[k] != 0;
  est.duration_s.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    est.duration_s[i] = peaks[i + 1] - peaks[i];
  }
  peaks.pop_back();
  erasure.pop_back();
  est.info_start_s = peaks;
  est.sync_peak_s = std::move(peaks);
  est.erasure = std::move(erasure);
  return est;
}

void AnalyticHitSource::sample(const MoleculeSpec& spec, std::int64_t count, double t_max, std::uint64_t seed,
                               std::vector<double>& delays) const {
  Xoshiro256 rng(seed);
  for (std::int64_t i = 0; i < count; ++i) {
    if (auto t = sample_hit_time(geom_, spec.diffusion_um2_s, uniform_open01(rng)); t && *t < t_max) {
      delays.push_back(*t);
    }
  }
}

void ParticleHitSource::sample(const MoleculeSpec& spec, std::int64_t count, double t_max, std::uint64_t seed,
                               std::vector<double>& delays) const {
  if (count <= 0 || t_max < overrides_.dt_s) {
    return;
  }
  const ParticleSimConfig cfg{
      .geom = geom_,
      .diffusion_um2_s = spec.diffusion_um2_s,
      .n_molecules = count,
      .dt_s = overrides_.dt_s,
      .t_max_s = t_max,
      .seed = seed,
      .threads = overrides_.threads,
  };
  const HitRecord record = simulate_first_hits(cfg);
  for (double t : record.hit_times) {
    if (t < t_max) {
      delays.push_back(t);
    }
  }
}

ArrivalSeries synthesize_arrivals(const EmissionSchedule& schedule, const HitTimeSource& source,
                                  const MoleculePair& molecules, double bin_width_s, double horizon_s,
                                  std::uint64_t seed) {
  molecules.validate();
  if (!std::isfinite(bin_width_s) || bin_width_s <= 0.0) {
    throw std::invalid_argument("synthesize_arrivals: bin width must be positive");
  }
  if (!std::isfinite(horizon_s) || horizon_s <= 0.0) {
    throw std::invalid_argument("synthesize_arrivals: horizon must be positive");
  }
  if (!schedule.symbol_starts.empty()) {
    const double needed = schedule.end_time() + 2.0 * schedule.nominal_duration_s;
    if (horizon_s < needed * (1.0 - 1e-12)) {
      throw std::invalid_argument("synthesize_arrivals: horizon shorter than schedule end + 2 T_s");
    }
  }
  // Bins whose start lies before the horizon.
  const double x = horizon_s / bin_width_s;
  const double nearest = std::nearbyint(x);
  const auto n_bins = static_cast<std::int64_t>(std::abs(x - nearest) < 1e-7 ? nearest : std::ceil(x));

  std::vector<std::int64_t> info_bins;
  std::vector<std::int64_t> sync_bins;
  std::vector<double> delays;
  for (std::size_t j = 0; j < schedule.events.size(); ++j) {
    const EmissionEvent& event = schedule.events[j];
    const double t_left = horizon_s - event.release_time_s;
    if (t_left <= 0.0) {
      continue;
    }
    delays.clear();
    source.sample(molecules.get(event.type), event.count, t_left, derive_seed(seed, {j}), delays);
    auto& bins = event.type == MoleculeType::Information ? info_bins : sync_bins;
    for (double delay : delays) {
      const double t = event.release_time_s + delay;
      const auto bin = static_cast<std::int64_t>(std::floor(t / bin_width_s));
      if (t < horizon_s && bin < n_bins) {
        bins.push_back(bin);
      }
    }
  }
  return ArrivalSeries(bin_width_s, n_bins, std::move(info_bins), std::move(sync_bins));
}

ArrivalSeries synthesize_arrivals(const EmissionSchedule& schedule, const ChannelGeometry& geom,
                                  const MoleculePair& molecules, double bin_width_s, double horizon_s,
                                  std::uint64_t seed) {
  geom.validate();
  return synthesize_arrivals(schedule, AnalyticHitSource(geom), molecules, bin_width_s, horizon_s, seed);
}

ArrivalSeries synthesize_arrivals_particle(const EmissionSchedule& schedule, const ChannelGeometry& geom,
                                           const MoleculePair& molecules, double bin_width_s, double horizon_s,
                                           std::uint64_t seed, ParticleOverrides overrides) {
  geom.validate();
  return synthesize_arrivals(schedule, ParticleHitSource(geom, overrides), molecules, bin_width_s, horizon_s, seed);
}

double expected_peak_bin_count(const ChannelGeometry& geom, double diffusion, std::int64_t n, double bin_width_s) {
  const auto bin_mass = [&](std::int64_t i) {
    return hitting_fraction(geom, diffusion, static_cast<double>(i + 1) * bin_width_s) -
           hitting_fraction(geom, diffusion, static_cast<double>(i) * bin_width_s);
  };
  // Bin masses are unimodal; climb from the bin holding the mode.
  std::int64_t i = static_cast<std::int64_t>(std::floor(peak_time(geom, diffusion) / bin_width_s));
  while (i > 0 && bin_mass(i - 1) > bin_mass(i)) {
    --i;
  }
  while (bin_mass(i + 1) > bin_mass(i)) {
    ++i;
  }
  return static_cast<double>(n) * bin_mass(i);
}

double noise_sigma(double peak_bin_count, double snr_db) {
  if (snr_db == std::numeric_limits<double>::infinity()) {
    return 0.0;
  }
  return peak_bin_count / std::sqrt(std::pow(10.0, snr_db / 10.0));
}

ArrivalSeries add_counting_noise(const ArrivalSeries& series, const ChannelGeometry& geom, const MoleculeSpec& spec,
                                 std::int64_t n_per_symbol, const NoiseConfig& noise) {
  noise.validate();
  if (!noise.enabled()) {
    return series;
  }
  const double s_peak = expected_peak_bin_count(geom, spec.diffusion_um2_s, n_per_symbol, series.bin_width());
  const NoiseLayer layer{
      .sigma = noise_sigma(s_peak, noise.snr_db),
      .seed = derive_seed(noise.seed, {static_cast<std::uint64_t>(spec.type)}),
      .clamp = noise.clamp,
  };
  return series.with_noise(spec.type, layer);
}

SyncEstimate estimate_sync_peaks(const ArrivalSeries& series, const DetectorConfig& det, const ChannelGeometry& geom,
                                 const MoleculeSpec& sync, std::int64_t n_sync, double symbol_duration_s,
                                 std::int64_t n_symbols) {
  det.validate();
  if (n_symbols < 1) {
    throw std::invalid_argument("estimate_sync_peaks: need at least one symbol");
  }
  const double dt = series.bin_width();
  const std::int64_t window = det.smooth_window;
  const std::int64_t half = window / 2;

  // Reference response: height of the smoothed peak and the bin where it sits.
  const SmoothedResponse response{geom, sync.diffusion_um2_s, static_cast<double>(n_sync), dt, window};
  std::int64_t ref_bin = 0;
  double ref_height = 0.0;
  const std::int64_t scan_end = bins_in(4.0 * peak_time(geom, sync.diffusion_um2_s), dt) + window;
  for (std::int64_t i = 0; i <= scan_end; ++i) {
    if (const double v = response(i); v > ref_height) {
      ref_height = v;
      ref_bin = i;
    }
  }
  const double lag = static_cast<double>(ref_bin) * dt - peak_time(geom, sync.diffusion_um2_s);
  const double gate = det.gate_fraction * ref_height;

  const std::int64_t nominal = bins_in(symbol_duration_s, dt);
  const std::int64_t refractory = std::max<std::int64_t>(1, bins_in(det.refractory_fraction * symbol_duration_s, dt));
  const std::int64_t horizon = bins_in(det.search_horizon * symbol_duration_s, dt);

  // Smoothed response indexed by bins since release, for cancelling the tails
  // of pulses already detected.
  const std::int64_t tail_len = bins_in(6.0 * symbol_duration_s, dt) + window;
  std::vector<double> tail_table(static_cast<std::size_t>(tail_len));
  for (std::int64_t o = 0; o < tail_len; ++o) {
    tail_table[static_cast<std::size_t>(o)] = response(o);
  }
  std::vector<std::int64_t> releases;  // estimated release bins of detected pulses

  SeriesReader reader(series, MoleculeType::Synchronization);
  std::vector<double> raw;
  std::vector<double> smooth;
  std::vector<double> peaks;
  std::vector<std::uint8_t> erasure;
  peaks.reserve(static_cast<std::size_t>(n_symbols) + 1);
  erasure.reserve(static_cast<std::size_t>(n_symbols) + 1);

  // A virtual peak one nominal symbol before the first expected peak anchors the first window.
  std::int64_t prev = ref_bin - nominal;
  for (std::int64_t k = 0; k <= n_symbols; ++k) {
    const std::int64_t lo = std::max<std::int64_t>(0, prev + refractory);
    const std::int64_t hi = std::min(series.size(), prev + horizon);
    std::int64_t found = -1;
    if (lo < hi) {
      // smooth[i] is the moving average centered on bin lo + i.
      const std::int64_t read_lo = std::max<std::int64_t>(0, lo - half);
      const std::int64_t read_hi = std::min(series.size(), hi - half + window);
      raw.resize(static_cast<std::size_t>(read_hi - read_lo));
      reader.read(read_lo, raw);
      const auto at = [&](std::int64_t bin) {
        return bin < read_lo || bin >= read_hi ? 0.0 : raw[static_cast<std::size_t>(bin - read_lo)];
      };
      smooth.resize(static_cast<std::size_t>(hi - lo));
      double acc = 0.0;
      for (std::int64_t b = lo - half; b < lo - half + window; ++b) {
        acc += at(b);
      }
      for (std::int64_t i = 0; i < hi - lo; ++i) {
        smooth[static_cast<std::size_t>(i)] = acc / static_cast<double>(window);
        const std::int64_t leaving = lo + i - half;
        acc += at(leaving + window) - at(leaving);
      }
      for (auto r = releases.rbegin(); r != releases.rend() && lo - *r < tail_len; ++r) {
        const std::int64_t end = std::min(hi, *r + tail_len);
        for (std::int64_t b = std::max(lo, *r); b < end; ++b) {
          smooth[static_cast<std::size_t>(b - lo)] -= tail_table[static_cast<std::size_t>(b - *r)];
        }
      }

      auto argmax = [&](std::int64_t end) {
        return static_cast<std::int64_t>(std::max_element(smooth.begin(), smooth.begin() + end) - smooth.begin());
      };
      std::int64_t best = argmax(hi - lo);
      while (best - refractory > 0) {
        const std::int64_t earlier = argmax(best - refractory);
        if (smooth[static_cast<std::size_t>(earlier)] > gate) {
          best = earlier;
        } else {
          break;
        }
      }
      if (smooth[static_cast<std::size_t>(best)] > gate) {
        found = lo + best;
      }
    }
    if (found >= 0) {
      prev = found;
      erasure.push_back(0);
    } else {
      prev += nominal;
      if (prev >= series.size()) {
        throw SeriesTooShort("estimate_sync_peaks: series ends before peak " + std::to_string(k));
      }
      erasure.push_back(1);
    }
    releases.push_back(prev - ref_bin);
    peaks.push_back(static_cast<double>(prev) * dt - lag);
  }
  return sync_estimate_from_peaks(std::move(peaks), std::move(erasure));
}

SymbolSequence detect_symbols_synced(const ArrivalSeries& series, const SyncEstimate& est, double threshold) {
  SeriesReader reader(series, MoleculeType::Information);
  SymbolSequence bits(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    const std::int64_t first = series.first_bin_at_or_after(est.info_start_s[k]);
    const std::int64_t last = series.first_bin_at_or_after(est.info_start_s[k] + est.duration_s[k]);
    bits[k] = reader.sum(first, last) > threshold ? 1 : 0;
  }
  return bits;
}

SymbolSequence detect_symbols_fixed(const ArrivalSeries& series, double symbol_duration_s, std::int64_t n_symbols,
                                    double threshold) {
  if (n_symbols < 0) {
    throw std::invalid_argument("detect_symbols_fixed: negative symbol count");
  }
  if (static_cast<double>(n_symbols) * symbol_duration_s > series.duration() * (1.0 + 1e-12)) {
    throw SeriesTooShort("detect_symbols_fixed: series shorter than K * T_s");
  }
  SeriesReader reader(series, MoleculeType::Information);
  SymbolSequence bits(static_cast<std::size_t>(n_symbols));
  for (std::int64_t k = 0; k < n_symbols; ++k) {
    const std::int64_t first = series.first_bin_at_or_after(static_cast<double>(k) * symbol_duration_s);
    const std::int64_t last = series.first_bin_at_or_after(static_cast<double>(k + 1) * symbol_duration_s);
    bits[static_cast<std::size_t>(k)] = reader.sum(first, last) > threshold ? 1 : 0;
  }
  return bits;
}

SyncEstimate inject_sync_error(const SyncEstimate& est, double e_bar_target, double symbol_duration_s,
                               std::uint64_t seed) {
  if (!(e_bar_target >= 0.0) || !std::isfinite(e_bar_target)) {
    throw std::invalid_argument("inject_sync_error: target must be finite and non-negative");
  }
  if (e_bar_target == 0.0 || est.size() == 0) {
    return est;
  }
  const double sigma = e_bar_target * symbol_duration_s * std::sqrt(std::numbers::pi / 2.0);
  Xoshiro256 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, sigma);

  std::vector<double> peaks = est.sync_peak_s;
  peaks.push_back(est.lookahead_peak_s);
  for (double& p : peaks) {
    p += normal(rng);
  }
  std::int64_t violations = 0;
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    violations += peaks[i] <= peaks[i - 1] ? 1 : 0;
  }
  std::sort(peaks.begin(), peaks.end());
  std::vector<std::uint8_t> erasure = est.erasure;
  erasure.push_back(est.lookahead_erasure ? 1 : 0);
  SyncEstimate out = sync_estimate_from_peaks(std::move(peaks), std::move(erasure));
  out.reordered = est.reordered + violations;
  return out;
}

}  // namespace mcsync
