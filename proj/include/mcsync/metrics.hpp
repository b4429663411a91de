#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcsync/arrival_series.hpp"
#include "mcsync/channel_model.hpp"
#include "mcsync/rx.hpp"
#include "mcsync/tx.hpp"

namespace mcsync {

struct MetricsReport {
  double ser = 0.0;
  double e_bar = 0.0;
  double erasure_rate = 0.0;
  double eye_height = 0.0;  // NaN when not computed
  double eye_width = 0.0;   // seconds, NaN when not computed
  std::int64_t n_symbols = 0;
  bool e_bar_flagged = false;  // e_bar above 1, only expected under injected error
};

/// Hamming distance over length. Throws std::invalid_argument on length mismatch or empty input.
double symbol_error_rate(std::span<const std::uint8_t> tx_bits, std::span<const std::uint8_t> rx_bits);

/// mean_k |est.sync_peak[k] - (truth_start[k] + d^2 / (6 D_sync))| / mean_k T(k).
double normalized_sync_error(const SyncEstimate& est, std::span<const double> truth_starts,
                             const ChannelGeometry& geom, double sync_diffusion, std::span<const double> durations);

class UndefinedEye : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EyeTrace {
  std::int64_t symbol = 0;
  std::uint8_t bit = 0;
  std::vector<double> cumulative;  // normalized by N_info, one value per offset
};

struct EyeDiagram {
  std::vector<double> offsets_s;  // sample offsets in (0, span]
  std::vector<EyeTrace> traces;
  std::vector<double> opening;  // min over '1' minus max over '0', per offset
  double eye_height = 0.0;      // opening at sample_fraction * span
  double eye_width = 0.0;       // longest run of offsets with positive opening, seconds
};

/// Overlays cumulative info counts over [starts[k], starts[k] + span) for every
/// symbol, sampled at n_points evenly spaced offsets. Throws UndefinedEye when
/// only one bit value is present, std::invalid_argument on bad arguments.
EyeDiagram eye_diagram(const ArrivalSeries& series, std::span<const double> starts, const SymbolSequence& bits,
                       double span_s, double sample_fraction, std::int64_t n_info, std::int64_t n_points = 200);

/// CSV with header `symbol_index,bit,t_offset_s,normalized_cumulative_count`.
void write_eye_csv(const EyeDiagram& eye, std::ostream& out);

}  // namespace mcsync
