#pragma once

// Closed-form first-hitting quantities for a point transmitter and a fully
// absorbing spherical receiver in an unbounded 3-D medium without drift.
//
// Units are fixed across the library: lengths in micrometers, time in
// seconds, diffusion coefficients in um^2/s.

#include <optional>
#include <string_view>

namespace mcsync {

struct ChannelGeometry {
  double radius_um = 2.0;    // receiver radius r
  double distance_um = 4.0;  // transmitter to receiver surface, d

  /// Throws std::invalid_argument unless r > 0 and d > 0.
  void validate() const;

  /// r / (d + r): probability that a released molecule is ever absorbed.
  double capture_probability() const noexcept { return radius_um / (distance_um + radius_um); }

  friend bool operator==(const ChannelGeometry&, const ChannelGeometry&) = default;
};

enum class MoleculeType { Information, Synchronization };

std::string_view to_string(MoleculeType type) noexcept;

struct MoleculeSpec {
  MoleculeType type = MoleculeType::Information;
  double diffusion_um2_s = 79.4;

  void validate() const;

  friend bool operator==(const MoleculeSpec&, const MoleculeSpec&) = default;
};

/// Information and synchronization species used together. The scheme relies on
/// the synchronization molecules diffusing faster.
struct MoleculePair {
  MoleculeSpec info{MoleculeType::Information, 79.4};
  MoleculeSpec sync{MoleculeType::Synchronization, 158.8};

  void validate() const;
  const MoleculeSpec& get(MoleculeType type) const noexcept {
    return type == MoleculeType::Information ? info : sync;
  }

  friend bool operator==(const MoleculePair&, const MoleculePair&) = default;
};

/// Hitting rate f(t) = r/(d+r) * d / sqrt(4 pi D t^3) * exp(-d^2 / (4 D t)), in 1/s.
/// Exactly 0 at t = 0. Throws std::invalid_argument for negative or non-finite t.
double hitting_rate(const ChannelGeometry& geom, double diffusion, double t);

/// Cumulative fraction F(t) = r/(d+r) * erfc(d / sqrt(4 D t)) absorbed by time t.
/// Exactly 0 at t = 0, r/(d+r) at t = +inf. Throws for negative or NaN t.
double hitting_fraction(const ChannelGeometry& geom, double diffusion, double t);

/// Mode of the hitting-rate curve, d^2 / (6 D).
double peak_time(const ChannelGeometry& geom, double diffusion);

/// Inverse-CDF draw of one molecule's absorption time for u in (0, 1).
/// Returns std::nullopt when the molecule escapes (u >= r/(d+r)).
std::optional<double> sample_hit_time(const ChannelGeometry& geom, double diffusion, double u);

/// Inverse complementary error function on (0, 2).
double erfc_inv(double x);

}  // namespace mcsync
