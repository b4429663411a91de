#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mcsync/channel_model.hpp"

using namespace mcsync;

namespace {

const ChannelGeometry kTable{2.0, 4.0};

double trapezoid(const ChannelGeometry& g, double D, double T, double h) {
  const auto n = static_cast<std::int64_t>(std::llround(T / h));
  double s = 0.5 * (hitting_rate(g, D, 0.0) + hitting_rate(g, D, T));
  for (std::int64_t i = 1; i < n; ++i) s += hitting_rate(g, D, static_cast<double>(i) * h);
  return s * h;
}

}  // namespace

TEST_CASE("hitting_rate at zero and bad inputs") {
  CHECK(hitting_rate(ChannelGeometry{4.0, 4.0}, 79.4, 0.0) == 0.0);
  CHECK(hitting_rate(ChannelGeometry{4.0, 4.0}, 79.4, 1e-6) < 1e-300);
  CHECK_THROWS_AS(hitting_rate(kTable, 79.4, -1e-3), std::invalid_argument);
  CHECK_THROWS_AS(hitting_rate(kTable, 79.4, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(hitting_rate(kTable, 79.4, std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("hitting_rate at the mode matches a derivative of hitting_fraction") {
  const double t = 16.0 / (6.0 * 79.4);
  const double h = 1e-6;
  const double numeric = (hitting_fraction(kTable, 79.4, t + h) - hitting_fraction(kTable, 79.4, t - h)) / (2 * h);
  CHECK(hitting_rate(kTable, 79.4, t) == doctest::Approx(numeric).epsilon(1e-6));
  CHECK(hitting_rate(kTable, 79.4, t) == doctest::Approx(1.530).epsilon(1e-3));
}

TEST_CASE("hitting_fraction limits and spot value") {
  CHECK(hitting_fraction(kTable, 79.4, 0.0) == 0.0);
  CHECK(hitting_fraction(kTable, 158.8, 0.0) == 0.0);
  CHECK(hitting_fraction(kTable, 79.4, std::numeric_limits<double>::infinity()) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(hitting_fraction(kTable, 79.4, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(hitting_fraction(kTable, 79.4, std::nan("")), std::invalid_argument);

  // Adaptive quadrature of the rate is the independent oracle.
  auto f = [](double t) { return hitting_rate(kTable, 79.4, t); };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 0.38, 15, 1e-12);
  CHECK(hitting_fraction(kTable, 79.4, 0.38) == doctest::Approx(integral).epsilon(1e-9));
  CHECK(std::abs(hitting_fraction(kTable, 79.4, 0.38) - 0.2024) < 5e-4);
}

TEST_CASE("geometry and molecule validation") {
  CHECK_THROWS_AS((ChannelGeometry{0.0, 4.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ChannelGeometry{2.0, -1.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW(kTable.validate());
  CHECK_THROWS_AS((MoleculeSpec{MoleculeType::Information, 0.0}.validate()), std::invalid_argument);
  MoleculePair swapped{{MoleculeType::Information, 158.8}, {MoleculeType::Synchronization, 79.4}};
  CHECK_THROWS_AS(swapped.validate(), std::invalid_argument);
  CHECK_NOTHROW(MoleculePair{}.validate());
  CHECK(kTable.capture_probability() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("peak_time values and scaling") {
  CHECK(peak_time(kTable, 158.8) == doctest::Approx(0.016793).epsilon(1e-4));
  CHECK(peak_time(kTable, 520.0) == doctest::Approx(0.005128).epsilon(1e-3));
  CHECK(peak_time(kTable, 2 * 79.4) == doctest::Approx(peak_time(kTable, 79.4) / 2));
}

TEST_CASE("sample_hit_time escape, errors and round trip") {
  CHECK_FALSE(sample_hit_time(kTable, 79.4, 1.0 / 3.0).has_value());
  CHECK_FALSE(sample_hit_time(kTable, 79.4, 0.9).has_value());
  CHECK_THROWS_AS(sample_hit_time(kTable, 79.4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_hit_time(kTable, 79.4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_hit_time(kTable, 79.4, -0.2), std::invalid_argument);

  const auto t = sample_hit_time(kTable, 79.4, hitting_fraction(kTable, 79.4, 0.1));
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(0.1).epsilon(1e-9));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(1e-6, 1.0 / 3.0 - 1e-6);
  for (int i = 0; i < 1000; ++i) {
    const double u = u01(rng);
    const auto s = sample_hit_time(kTable, 79.4, u);
    REQUIRE(s.has_value());
    CHECK(hitting_fraction(kTable, 79.4, *s) == doctest::Approx(u).epsilon(1e-9));
  }
}

TEST_CASE("erfc_inv inverts erfc") {
  for (double x : {1e-12, 1e-3, 0.3, 1.0, 1.7, 2.0 - 1e-9}) {
    CHECK(std::erfc(erfc_inv(x)) == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("monotone and bounded on random grids") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> r(0.5, 10.0), d(0.5, 20.0), D(10.0, 1000.0), t(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const ChannelGeometry g{r(rng), d(rng)};
    const double diff = D(rng);
    double a = t(rng), b = t(rng);
    if (a > b) std::swap(a, b);
    CHECK(hitting_fraction(g, diff, b) >= hitting_fraction(g, diff, a));
    CHECK(hitting_fraction(g, diff, b) <= g.capture_probability() + 1e-12);
  }
}

TEST_CASE("trapezoid integral of the rate matches the fraction") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> r(0.5, 10.0), d(1.0, 10.0), logD(std::log(10.0), std::log(1000.0));
  int done = 0;
  while (done < 100) {
    const ChannelGeometry g{r(rng), d(rng)};
    const double D = std::exp(logD(rng));
    const double tp = peak_time(g, D);
    if (tp < 0.005 || 100 * tp > 2.0) continue;  // keep the 10 us grid fine and the run short
    const double T = 100 * tp;
    const double exact = hitting_fraction(g, D, T);
    CHECK(std::abs(trapezoid(g, D, T, 1e-5) - exact) / exact <= 1e-6);
    ++done;
  }
}

TEST_CASE("grid argmax of the rate sits at peak_time") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> r(0.5, 10.0), d(1.0, 10.0), logD(std::log(20.0), std::log(1000.0));
  for (int trial = 0; trial < 100; ++trial) {
    const ChannelGeometry g{r(rng), d(rng)};
    const double D = std::exp(logD(rng));
    const double h = 1e-5;
    const double tp = peak_time(g, D);
    // Scan [tp / 4, 4 tp]; the rate is unimodal so the global maximum lies there.
    auto i0 = static_cast<std::int64_t>(tp / 4 / h), i1 = static_cast<std::int64_t>(4 * tp / h);
    std::int64_t best = i0;
    for (auto i = i0; i <= i1; ++i) {
      if (hitting_rate(g, D, i * h) > hitting_rate(g, D, best * h)) best = i;
    }
    CHECK(std::abs(best * h - tp) <= h);
  }
}

TEST_CASE("type labels") {
  CHECK(to_string(MoleculeType::Information) == "info");
  CHECK(to_string(MoleculeType::Synchronization) == "sync");
}
