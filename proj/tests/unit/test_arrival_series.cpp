#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "mcsync/arrival_series.hpp"

using namespace mcsync;

namespace {

ArrivalSeries random_series(std::int64_t n_bins, int hits, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> bin(0, n_bins - 1);
  std::vector<std::int64_t> a(hits), b(hits);
  for (auto& x : a) x = bin(rng);
  for (auto& x : b) x = bin(rng);
  return ArrivalSeries(1e-5, n_bins, a, b);
}

}  // namespace

TEST_CASE("construction and raw counts") {
  ArrivalSeries s(1e-3, 10, {3, 1, 3}, {0, 9});
  CHECK(s.size() == 10);
  CHECK(s.duration() == doctest::Approx(0.01));
  const auto info = s.values(MoleculeType::Information, 0, 10);
  CHECK(info == std::vector<double>{0, 1, 0, 2, 0, 0, 0, 0, 0, 0});
  CHECK(s.sum(MoleculeType::Synchronization, 0, 10) == 2);
  CHECK(s.sum(MoleculeType::Synchronization, 1, 9) == 0);
  CHECK(std::is_sorted(s.hits(MoleculeType::Information).begin(), s.hits(MoleculeType::Information).end()));
  CHECK_THROWS_AS(ArrivalSeries(1e-3, 10, {10}, {}), std::invalid_argument);
  CHECK_THROWS_AS(ArrivalSeries(1e-3, 10, {-1}, {}), std::invalid_argument);
  CHECK_THROWS_AS(ArrivalSeries(0.0, 10, {}, {}), std::invalid_argument);
}

TEST_CASE("empty series") {
  ArrivalSeries s(1e-5, 100, {}, {});
  CHECK(s.sum(MoleculeType::Information, 0, 100) == 0);
  CHECK(s.sum(MoleculeType::Synchronization, 0, 100) == 0);
}

TEST_CASE("time to bin mapping tolerates rounding") {
  ArrivalSeries s(1e-5, 1000000, {}, {});
  CHECK(s.first_bin_at_or_after(0.0) == 0);
  CHECK(s.first_bin_at_or_after(-1.0) == 0);
  CHECK(s.first_bin_at_or_after(0.38) == 38000);
  CHECK(s.first_bin_at_or_after(3 * 0.38) == 114000);
  CHECK(s.first_bin_at_or_after(0.380004) == 38001);
  CHECK(s.first_bin_at_or_after(100.0) == 1000000);
}

TEST_CASE("noise layer is deterministic and non-negative") {
  const auto clean = random_series(50000, 300, 3);
  for (auto mode : {ClampMode::PerBin, ClampMode::CarryDeficit}) {
    const auto noisy = clean.with_noise(MoleculeType::Information, NoiseLayer{0.5, 8, mode});
    const auto v = noisy.values(MoleculeType::Information, 0, noisy.size());
    CHECK(*std::min_element(v.begin(), v.end()) >= 0.0);
    const auto again = clean.with_noise(MoleculeType::Information, NoiseLayer{0.5, 8, mode});
    CHECK(again.values(MoleculeType::Information, 0, again.size()) == v);
    // The other type is untouched.
    CHECK(noisy.values(MoleculeType::Synchronization, 0, noisy.size()) ==
          clean.values(MoleculeType::Synchronization, 0, clean.size()));
  }
}

TEST_CASE("carrying the deficit keeps block totals unbiased") {
  ArrivalSeries zero(1e-5, ArrivalSeries::kNoiseBlockBins * 50, {}, {});
  const double sigma = 0.2;
  const auto per_bin = zero.with_noise(MoleculeType::Information, NoiseLayer{sigma, 4, ClampMode::PerBin});
  const auto carry = zero.with_noise(MoleculeType::Information, NoiseLayer{sigma, 4, ClampMode::CarryDeficit});
  const double n = static_cast<double>(zero.size());
  // Clamping each bin adds E[max(0, X)] = sigma / sqrt(2 pi) per bin.
  CHECK(per_bin.sum(MoleculeType::Information, 0, zero.size()) / n ==
        doctest::Approx(sigma / std::sqrt(2 * M_PI)).epsilon(0.02));
  // With the deficit carried, only the leftover at each block end remains.
  CHECK(carry.sum(MoleculeType::Information, 0, zero.size()) / n < 0.1 * sigma / std::sqrt(2 * M_PI));
}

TEST_CASE("reader sums agree with materialized values") {
  const auto clean = random_series(30000, 500, 5);
  const auto noisy = clean.with_noise(MoleculeType::Synchronization, NoiseLayer{0.3, 2, ClampMode::CarryDeficit});
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> pos(0, noisy.size());
  for (const auto* s : {&clean, &noisy}) {
    const auto all = s->values(MoleculeType::Synchronization, 0, s->size());
    SeriesReader reader(*s, MoleculeType::Synchronization);
    for (int i = 0; i < 200; ++i) {
      auto a = pos(rng), b = pos(rng);
      if (a > b) std::swap(a, b);
      const double direct = std::accumulate(all.begin() + a, all.begin() + b, 0.0);
      CHECK(reader.sum(a, b) == doctest::Approx(direct).epsilon(1e-9));
      CHECK(s->sum(MoleculeType::Synchronization, a, b) == doctest::Approx(direct).epsilon(1e-9));
      std::vector<double> chunk(static_cast<std::size_t>(b - a));
      reader.read(a, chunk);
      CHECK(std::equal(chunk.begin(), chunk.end(), all.begin() + a));
    }
  }
}

TEST_CASE("series CSV") {
  ArrivalSeries s(1e-3, 3, {1}, {1, 2});
  std::ostringstream os;
  write_series_csv(s, os);
  CHECK(os.str() == "bin_start_s,count_info,count_sync\n0,0,0\n0.001,1,1\n0.002,0,1\n");
}
