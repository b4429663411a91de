#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mcsync/brownian_engine.hpp"
#include "mcsync/random.hpp"

using namespace mcsync;

namespace {

ParticleSimConfig base(std::int64_t n, double t_max, std::uint64_t seed) {
  ParticleSimConfig c;
  c.geom = {2.0, 4.0};
  c.diffusion_um2_s = 79.4;
  c.n_molecules = n;
  c.t_max_s = t_max;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  auto c = base(10, 0.1, 1);
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.dt_s = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.t_max_s = c.dt_s / 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.n_molecules = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.dt_s = 1e-3;  // sqrt(2 * 79.4 * 1e-3) = 0.4 < 0.5 still fine
  CHECK_NOTHROW(bad.validate());
  bad.dt_s = 2e-3;  // 0.56 > r / 4
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(simulate_first_hits(bad), std::invalid_argument);
}

TEST_CASE("deterministic and independent of thread count") {
  auto c = base(3000, 0.2, 42);
  c.threads = 1;
  const auto a = simulate_first_hits(c);
  const auto b = simulate_first_hits(c);
  c.threads = 4;
  const auto p = simulate_first_hits(c);
  CHECK(a.hit_times == b.hit_times);
  CHECK(a.hit_times == p.hit_times);
  CHECK(a.n_released == 3000);
}

TEST_CASE("hit record invariants and empirical_fraction identities") {
  const auto c = base(5000, 0.3, 7);
  const auto rec = simulate_first_hits(c);
  REQUIRE_FALSE(rec.hit_times.empty());
  CHECK(std::is_sorted(rec.hit_times.begin(), rec.hit_times.end()));
  CHECK(rec.hit_times.front() > 0.0);
  CHECK(rec.hit_times.back() <= c.t_max_s);
  CHECK(static_cast<std::int64_t>(rec.hit_times.size()) <= rec.n_released);
  CHECK(empirical_fraction(rec, 0.0) == 0.0);
  CHECK(empirical_fraction(rec, c.t_max_s) ==
        doctest::Approx(static_cast<double>(rec.hit_times.size()) / rec.n_released));
}

TEST_CASE("distant transmitter yields no hits") {
  auto c = base(2000, 0.01, 3);
  c.geom.distance_um = 1000.0;
  CHECK(simulate_first_hits(c).hit_times.empty());
}

TEST_CASE("fractions agree with the closed form at moderate n") {
  const std::int64_t n = 20000;
  const auto rec = simulate_first_hits(base(n, 0.5, 11));
  const ChannelGeometry g{2.0, 4.0};
  for (double t : {0.0336, 0.0672, 0.336}) {
    const double F = hitting_fraction(g, 79.4, t);
    const double sd = std::sqrt(F * (1 - F) / n);
    // Endpoint checking misses some crossings; allow a small discretization bias.
    CHECK(std::abs(empirical_fraction(rec, t) - F) <= 4 * sd + 0.004);
  }
}

TEST_CASE("replicas with disjoint seeds have binomial spread") {
  const int replicas = 100;
  const std::int64_t n = 1000;
  const double t = 0.1;
  std::vector<double> p(replicas);
  for (int i = 0; i < replicas; ++i) {
    p[i] = empirical_fraction(simulate_first_hits(base(n, t, derive_seed(99, {static_cast<std::uint64_t>(i)}))), t);
  }
  double m = 0, v = 0;
  for (double x : p) m += x;
  m /= replicas;
  for (double x : p) v += (x - m) * (x - m);
  v /= replicas - 1;
  const double binom = m * (1 - m) / n;
  CHECK(v > binom / 2);
  CHECK(v < binom * 2);
}

TEST_CASE("hit time CSV") {
  HitRecord rec{{0.5, 0.25}, 3};
  std::ostringstream os;
  write_hit_times_csv(rec, os);
  CHECK(os.str() == "hit_time_s\n0.5\n0.25\n");
}
