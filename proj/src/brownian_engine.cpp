#include "mcsync/brownian_engine.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include "mcsync/parallel.hpp"
#include "mcsync/random.hpp"

namespace mcsync {

namespace {

// A 3-D Brownian path leaves a ball of radius g within time tau with
// probability at most 12 * Q(g / (sqrt(3) sigma_tau)), sigma_tau^2 = 2 D tau.
// At 7.5 sigmas that bound is ~4e-13 per aggregated step.
constexpr double kJumpSafetySigmas = 7.5;

constexpr std::int64_t kMoleculesPerTask = 4096;

struct Walk {
  double start_z;
  double radius_sq;
  double unit_variance;
  double safe_scale;  // (1 / (sqrt(3) * kJumpSafetySigmas))^2 / unit_variance
  std::int64_t n_steps;
  double dt;
  double t_max;
  std::uint64_t seed;

  std::optional<double> run(std::uint64_t molecule) const {
    Xoshiro256 rng(derive_seed(seed, {molecule}));
    boost::random::normal_distribution<double> normal;
    double x = 0.0;
    double y = 0.0;
    double z = start_z;
    std::int64_t step = 0;
    while (step < n_steps) {
      const double gap = std::sqrt(x * x + y * y + z * z) - std::sqrt(radius_sq);
      const double allowed = gap * gap * safe_scale;
      const std::int64_t remaining = n_steps - step;
      std::int64_t m = 1;
      if (allowed >= 2.0) {
        m = allowed >= static_cast<double>(remaining) ? remaining : static_cast<std::int64_t>(allowed);
      }
      const double sigma = std::sqrt(unit_variance * static_cast<double>(m));
      x += sigma * normal(rng);
      y += sigma * normal(rng);
      z += sigma * normal(rng);
      step += m;
      if (x * x + y * y + z * z <= radius_sq) {
        return std::min(static_cast<double>(step) * dt, t_max);
      }
    }
    return std::nullopt;
  }
};

}  // namespace

void ParticleSimConfig::validate() const {
  geom.validate();
  if (!std::isfinite(diffusion_um2_s) || diffusion_um2_s <= 0.0) {
    throw std::invalid_argument("particle sim: diffusion coefficient must be positive");
  }
  if (!std::isfinite(dt_s) || dt_s <= 0.0) {
    throw std::invalid_argument("particle sim: dt must be positive");
  }
  if (!std::isfinite(t_max_s) || t_max_s < dt_s) {
    throw std::invalid_argument("particle sim: t_max must be at least dt");
  }
  if (n_molecules < 1) {
    throw std::invalid_argument("particle sim: need at least one molecule");
  }
  if (std::sqrt(2.0 * diffusion_um2_s * dt_s) > geom.radius_um / 4.0) {
    throw std::invalid_argument("particle sim: step scale sqrt(2 D dt) exceeds r/4");
  }
}

HitRecord simulate_first_hits(const ParticleSimConfig& cfg) {
  cfg.validate();
  const double unit_variance = 2.0 * cfg.diffusion_um2_s * cfg.dt_s;
  const Walk walk{
      .start_z = cfg.geom.distance_um + cfg.geom.radius_um,
      .radius_sq = cfg.geom.radius_um * cfg.geom.radius_um,
      .unit_variance = unit_variance,
      .safe_scale = 1.0 / (3.0 * kJumpSafetySigmas * kJumpSafetySigmas * unit_variance),
      .n_steps = static_cast<std::int64_t>(std::floor(cfg.t_max_s / cfg.dt_s + 1e-9)),
      .dt = cfg.dt_s,
      .t_max = cfg.t_max_s,
      .seed = cfg.seed,
  };

  const std::int64_t n_tasks = (cfg.n_molecules + kMoleculesPerTask - 1) / kMoleculesPerTask;
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(n_tasks));
  parallel_for(n_tasks, cfg.threads, [&](std::int64_t task) {
    const std::int64_t first = task * kMoleculesPerTask;
    const std::int64_t last = std::min(cfg.n_molecules, first + kMoleculesPerTask);
    auto& hits = partial[static_cast<std::size_t>(task)];
    for (std::int64_t i = first; i < last; ++i) {
      if (auto t = walk.run(static_cast<std::uint64_t>(i))) {
        hits.push_back(*t);
      }
    }
  });

  HitRecord record;
  record.n_released = cfg.n_molecules;
  for (auto& hits : partial) {
    record.hit_times.insert(record.hit_times.end(), hits.begin(), hits.end());
  }
  std::sort(record.hit_times.begin(), record.hit_times.end());
  return record;
}

double empirical_fraction(const HitRecord& record, double t) {
  if (record.n_released <= 0) {
    return 0.0;
  }
  const auto hits = std::upper_bound(record.hit_times.begin(), record.hit_times.end(), t) - record.hit_times.begin();
  return static_cast<double>(hits) / static_cast<double>(record.n_released);
}

void write_hit_times_csv(const HitRecord& record, std::ostream& out) {
  out << "hit_time_s\n";
  for (double t : record.hit_times) {
    out << fmt::format("{:.17g}\n", t);
  }
}

}  // namespace mcsync
