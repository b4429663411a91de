#include "mcsync/channel_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/erf.hpp>

namespace mcsync {

namespace {

void require_positive_finite(double value, const char* what) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

void validate_diffusion(double diffusion) { require_positive_finite(diffusion, "diffusion coefficient"); }

}  // namespace

void ChannelGeometry::validate() const {
  require_positive_finite(radius_um, "receiver radius");
  require_positive_finite(distance_um, "transmitter distance");
}

std::string_view to_string(MoleculeType type) noexcept {
  return type == MoleculeType::Information ? "info" : "sync";
}

void MoleculeSpec::validate() const { validate_diffusion(diffusion_um2_s); }

void MoleculePair::validate() const {
  info.validate();
  sync.validate();
  if (info.type != MoleculeType::Information || sync.type != MoleculeType::Synchronization) {
    throw std::invalid_argument("molecule pair labels are swapped");
  }
  if (!(sync.diffusion_um2_s > info.diffusion_um2_s)) {
    throw std::invalid_argument("synchronization molecules must diffuse faster than information molecules");
  }
}

double hitting_rate(const ChannelGeometry& geom, double diffusion, double t) {
  geom.validate();
  validate_diffusion(diffusion);
  if (!std::isfinite(t) || t < 0.0) {
    throw std::invalid_argument("hitting_rate: time must be finite and non-negative");
  }
  if (t == 0.0) {
    return 0.0;
  }
  const double d = geom.distance_um;
  return geom.capture_probability() * d / std::sqrt(4.0 * std::numbers::pi * diffusion * t * t * t) *
         std::exp(-d * d / (4.0 * diffusion * t));
}

double hitting_fraction(const ChannelGeometry& geom, double diffusion, double t) {
  geom.validate();
  validate_diffusion(diffusion);
  if (std::isnan(t) || t < 0.0) {
    throw std::invalid_argument("hitting_fraction: time must be non-negative");
  }
  if (t == 0.0) {
    return 0.0;
  }
  return geom.capture_probability() * std::erfc(geom.distance_um / std::sqrt(4.0 * diffusion * t));
}

double peak_time(const ChannelGeometry& geom, double diffusion) {
  geom.validate();
  validate_diffusion(diffusion);
  return geom.distance_um * geom.distance_um / (6.0 * diffusion);
}

double erfc_inv(double x) {
  if (!(x > 0.0 && x < 2.0)) {
    throw std::invalid_argument("erfc_inv: argument must lie in (0, 2)");
  }
  return boost::math::erfc_inv(x);
}

std::optional<double> sample_hit_time(const ChannelGeometry& geom, double diffusion, double u) {
  geom.validate();
  validate_diffusion(diffusion);
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("sample_hit_time: u must lie in (0, 1)");
  }
  const double p_hit = geom.capture_probability();
  if (u >= p_hit) {
    return std::nullopt;
  }
  const double z = boost::math::erfc_inv(u / p_hit);
  const double d = geom.distance_um;
  return d * d / (4.0 * diffusion * z * z);
}

}  // namespace mcsync
