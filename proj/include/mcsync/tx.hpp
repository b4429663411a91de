#pragma once

// Binary concentration-shift-keying transmitter with per-symbol
// synchronization releases and jittered symbol durations.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mcsync/channel_model.hpp"

namespace mcsync {

struct TxConfig {
  std::int64_t n_symbols = 10000;    // K
  double symbol_duration_s = 0.38;   // nominal T_s
  double sigma2_symbol = 0.0;        // pre-truncation variance of psi, in [0, 0.3]
  std::int64_t n_info = 1000;        // information molecules per '1'
  std::int64_t n_sync = 1000;        // synchronization molecules per symbol
  double p_one = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

/// One bit per symbol, values 0 or 1.
using SymbolSequence = std::vector<std::uint8_t>;

struct EmissionEvent {
  double release_time_s = 0.0;
  MoleculeType type = MoleculeType::Synchronization;
  std::int64_t count = 0;

  friend bool operator==(const EmissionEvent&, const EmissionEvent&) = default;
};

struct EmissionSchedule {
  std::vector<EmissionEvent> events;
  std::vector<double> symbol_starts;  // symbol_starts[0] == 0
  std::vector<double> durations;      // T(k)
  double nominal_duration_s = 0.0;

  std::size_t n_symbols() const noexcept { return symbol_starts.size(); }
  /// End of the last symbol, 0 for an empty schedule.
  double end_time() const noexcept;

  friend bool operator==(const EmissionSchedule&, const EmissionSchedule&) = default;
};

/// K i.i.d. Bernoulli(p_one) bits.
SymbolSequence generate_symbols(const TxConfig& cfg);

/// T(k) = (1 + psi_k) T_s with psi_k ~ N(0, sigma2_symbol) resampled until |psi_k| < 0.5.
std::vector<double> draw_symbol_durations(const TxConfig& cfg);

/// Sync release of n_sync at every symbol start; info release of n_info at the
/// same instant iff the bit is 1. Throws std::invalid_argument on length mismatch.
EmissionSchedule build_emission_schedule(const SymbolSequence& bits, std::span<const double> durations,
                                         const TxConfig& cfg);

/// CSV with header `release_time_s,type,count`.
void write_schedule_csv(const EmissionSchedule& schedule, std::ostream& out);

}  // namespace mcsync
