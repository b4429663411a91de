#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mcsync/tx.hpp"

using namespace mcsync;

namespace {

TxConfig cfg_with(std::int64_t k, double sigma2, double p_one = 0.5, std::uint64_t seed = 1) {
  TxConfig c;
  c.n_symbols = k;
  c.sigma2_symbol = sigma2;
  c.p_one = p_one;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(TxConfig{}.validate());
  auto c = cfg_with(0, 0);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = cfg_with(5, 0.31);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = cfg_with(5, -0.01);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = cfg_with(5, 0, 1.5);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = cfg_with(5, 0);
  c.n_sync = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = cfg_with(5, 0);
  c.symbol_duration_s = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("degenerate bit probabilities") {
  CHECK(generate_symbols(cfg_with(5, 0, 1.0)) == SymbolSequence{1, 1, 1, 1, 1});
  CHECK(generate_symbols(cfg_with(5, 0, 0.0)) == SymbolSequence{0, 0, 0, 0, 0});
}

TEST_CASE("fair bits") {
  const auto bits = generate_symbols(cfg_with(100000, 0));
  CHECK(std::all_of(bits.begin(), bits.end(), [](auto b) { return b == 0 || b == 1; }));
  const double mean = std::accumulate(bits.begin(), bits.end(), 0.0) / bits.size();
  CHECK(std::abs(mean - 0.5) <= 0.01);
}

TEST_CASE("durations without jitter are nominal") {
  for (double t : draw_symbol_durations(cfg_with(1000, 0))) CHECK(t == 0.38);
}

TEST_CASE("truncated durations stay inside the bounds") {
  const auto d = draw_symbol_durations(cfg_with(100000, 0.2));
  CHECK(std::all_of(d.begin(), d.end(), [](double t) { return t > 0.19 && t < 0.57; }));
  CHECK(*std::min_element(d.begin(), d.end()) < 0.2);  // the tails are reached
}

TEST_CASE("small jitter variance is reproduced") {
  const auto d = draw_symbol_durations(cfg_with(100000, 0.01));
  double m = 0, v = 0;
  for (double t : d) m += t / 0.38 - 1;
  m /= d.size();
  for (double t : d) v += (t / 0.38 - 1 - m) * (t / 0.38 - 1 - m);
  v /= d.size() - 1;
  CHECK(std::abs(v - 0.01) <= 0.05 * 0.01);
}

TEST_CASE("large jitter variance matches the truncated normal") {
  // Variance of N(0, s^2) truncated to (-a, a): s^2 (1 - 2 a phi(a/s) / (s (2 Phi(a/s) - 1))).
  const double s2 = 0.2, s = std::sqrt(s2), a = 0.5, z = a / s;
  const double phi = std::exp(-z * z / 2) / std::sqrt(2 * M_PI);
  const double mass = std::erf(z / std::sqrt(2.0));
  const double expected = s2 * (1 - 2 * z * phi / mass);
  const auto d = draw_symbol_durations(cfg_with(200000, s2));
  double v = 0;
  for (double t : d) v += (t / 0.38 - 1) * (t / 0.38 - 1);
  v /= d.size();
  CHECK(v == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("schedule for [1, 0]") {
  TxConfig c = cfg_with(2, 0);
  const std::vector<double> durations{0.38, 0.38};
  const auto s = build_emission_schedule({1, 0}, durations, c);
  REQUIRE(s.events.size() == 3);
  CHECK(s.events[0] == EmissionEvent{0.0, MoleculeType::Synchronization, 1000});
  CHECK(s.events[1] == EmissionEvent{0.0, MoleculeType::Information, 1000});
  CHECK(s.events[2] == EmissionEvent{0.38, MoleculeType::Synchronization, 1000});
  CHECK(s.end_time() == doctest::Approx(0.76));
}

TEST_CASE("single zero symbol has one event") {
  const std::vector<double> durations{0.38};
  const auto s = build_emission_schedule({0}, durations, cfg_with(1, 0));
  REQUIRE(s.events.size() == 1);
  CHECK(s.events[0].type == MoleculeType::Synchronization);
}

TEST_CASE("length mismatch is rejected") {
  const std::vector<double> durations{0.38};
  CHECK_THROWS_AS(build_emission_schedule({0, 1}, durations, cfg_with(2, 0)), std::invalid_argument);
}

TEST_CASE("schedule invariants on generated data") {
  const auto c = cfg_with(20000, 0.1, 0.5, 77);
  const auto bits = generate_symbols(c);
  const auto durations = draw_symbol_durations(c);
  const auto s = build_emission_schedule(bits, durations, c);

  CHECK(s.symbol_starts[0] == 0.0);
  for (std::size_t k = 0; k + 1 < s.n_symbols(); ++k) {
    CHECK(s.symbol_starts[k + 1] == s.symbol_starts[k] + s.durations[k]);
  }
  std::int64_t sync_events = 0, info_events = 0, info_molecules = 0;
  std::size_t k = 0;
  for (const auto& e : s.events) {
    if (e.type == MoleculeType::Synchronization) {
      k = static_cast<std::size_t>(sync_events++);
      CHECK(e.release_time_s == s.symbol_starts[k]);
      CHECK(e.count == c.n_sync);
    } else {
      CHECK(bits[k] == 1);
      CHECK(e.release_time_s == s.symbol_starts[k]);
      ++info_events;
      info_molecules += e.count;
    }
  }
  const auto ones = std::count(bits.begin(), bits.end(), 1);
  CHECK(sync_events == c.n_symbols);
  CHECK(info_events == ones);
  CHECK(info_molecules == c.n_info * ones);
  const double frac = static_cast<double>(info_events) / c.n_symbols;
  CHECK(frac >= 0.45);
  CHECK(frac <= 0.55);
}

TEST_CASE("determinism") {
  const auto c = cfg_with(500, 0.2, 0.5, 9);
  const auto a = build_emission_schedule(generate_symbols(c), draw_symbol_durations(c), c);
  const auto b = build_emission_schedule(generate_symbols(c), draw_symbol_durations(c), c);
  CHECK(a == b);
  auto other = c;
  other.seed = 10;
  CHECK_FALSE(generate_symbols(other) == generate_symbols(c));
}

TEST_CASE("schedule CSV") {
  const std::vector<double> durations{0.38, 0.38};
  const auto s = build_emission_schedule({1, 0}, durations, cfg_with(2, 0));
  std::ostringstream os;
  write_schedule_csv(s, os);
  CHECK(os.str() == "release_time_s,type,count\n0,sync,1000\n0,info,1000\n0.38,sync,1000\n");
}
