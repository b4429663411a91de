#include "mcsync/tx.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include "mcsync/random.hpp"

namespace mcsync {

namespace {
enum : std::uint64_t { kBitStream = 1, kDurationStream = 2 };
}

void TxConfig::validate() const {
  if (n_symbols < 1) {
    throw std::invalid_argument("tx: need at least one symbol");
  }
  if (!std::isfinite(symbol_duration_s) || symbol_duration_s <= 0.0) {
    throw std::invalid_argument("tx: symbol duration must be positive");
  }
  if (!(sigma2_symbol >= 0.0 && sigma2_symbol <= 0.3)) {
    throw std::invalid_argument("tx: sigma2_symbol must lie in [0, 0.3]");
  }
  if (n_info < 1 || n_sync < 1) {
    throw std::invalid_argument("tx: molecule counts must be at least 1");
  }
  if (!(p_one >= 0.0 && p_one <= 1.0)) {
    throw std::invalid_argument("tx: p_one must lie in [0, 1]");
  }
}

double EmissionSchedule::end_time() const noexcept {
  if (symbol_starts.empty()) {
    return 0.0;
  }
  return symbol_starts.back() + durations.back();
}

SymbolSequence generate_symbols(const TxConfig& cfg) {
  cfg.validate();
  Xoshiro256 rng(derive_seed(cfg.seed, {kBitStream}));
  SymbolSequence bits(static_cast<std::size_t>(cfg.n_symbols));
  for (auto& b : bits) {
    b = uniform_open01(rng) < cfg.p_one ? 1 : 0;
  }
  return bits;
}

std::vector<double> draw_symbol_durations(const TxConfig& cfg) {
  cfg.validate();
  std::vector<double> durations(static_cast<std::size_t>(cfg.n_symbols), cfg.symbol_duration_s);
  if (cfg.sigma2_symbol == 0.0) {
    return durations;
  }
  Xoshiro256 rng(derive_seed(cfg.seed, {kDurationStream}));
  boost::random::normal_distribution<double> normal(0.0, std::sqrt(cfg.sigma2_symbol));
  for (auto& t : durations) {
    double psi = normal(rng);
    while (!(psi > -0.5 && psi < 0.5)) {
      psi = normal(rng);
    }
    t = (1.0 + psi) * cfg.symbol_duration_s;
  }
  return durations;
}

EmissionSchedule build_emission_schedule(const SymbolSequence& bits, std::span<const double> durations,
                                         const TxConfig& cfg) {
  if (bits.size() != durations.size()) {
    throw std::invalid_argument("build_emission_schedule: bits and durations differ in length");
  }
  if (cfg.n_info < 1 || cfg.n_sync < 1) {
    throw std::invalid_argument("build_emission_schedule: molecule counts must be at least 1");
  }
  EmissionSchedule schedule;
  schedule.nominal_duration_s = cfg.symbol_duration_s;
  schedule.durations.assign(durations.begin(), durations.end());
  schedule.symbol_starts.reserve(bits.size());
  schedule.events.reserve(bits.size() * 2);

  double start = 0.0;
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (!(durations[k] > 0.0)) {
      throw std::invalid_argument("build_emission_schedule: durations must be positive");
    }
    if (bits[k] > 1) {
      throw std::invalid_argument("build_emission_schedule: bits must be 0 or 1");
    }
    schedule.symbol_starts.push_back(start);
    schedule.events.push_back({start, MoleculeType::Synchronization, cfg.n_sync});
    if (bits[k] == 1) {
      schedule.events.push_back({start, MoleculeType::Information, cfg.n_info});
    }
    start += durations[k];
  }
  return schedule;
}

void write_schedule_csv(const EmissionSchedule& schedule, std::ostream& out) {
  out << "release_time_s,type,count\n";
  for (const auto& e : schedule.events) {
    out << fmt::format("{:.17g},{},{}\n", e.release_time_s, to_string(e.type), e.count);
  }
}

}  // namespace mcsync
