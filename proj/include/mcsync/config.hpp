#pragma once

// Experiment configuration: a flat JSON object whose keys are the simulation
// parameter names (D_A, D_B, r, d, T_s, sigma2_symbol, delta_t) plus the
// transmitter, noise, detector and run-control fields. Unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcsync/brownian_engine.hpp"
#include "mcsync/channel_model.hpp"
#include "mcsync/rx.hpp"
#include "mcsync/tx.hpp"

namespace mcsync {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Backend { AnalyticSample, Particle };

enum class SweepParameter { SnrDb, Sigma2Symbol, EBarTarget };

std::string_view to_string(Backend backend) noexcept;
std::string_view to_string(SweepParameter parameter) noexcept;
std::string_view to_string(ThresholdRule rule) noexcept;
std::string_view to_string(ClampMode mode) noexcept;

Backend parse_backend(std::string_view text);
SweepParameter parse_sweep_parameter(std::string_view text);

struct Sweep {
  SweepParameter parameter = SweepParameter::SnrDb;
  std::vector<double> values;
};

struct ExperimentConfig {
  ChannelGeometry geometry;
  MoleculePair molecules;
  TxConfig tx;        // tx.seed is replaced per run
  NoiseConfig noise;  // noise.seed is replaced per run
  DetectorConfig detector;
  ThresholdRule threshold = ThresholdRule::Literal;
  double bin_width_s = 1e-5;
  double e_bar_target = 0.0;
  Backend backend = Backend::AnalyticSample;
  double particle_dt_s = 1e-5;
  std::int64_t runs = 20;
  std::uint64_t seed_base = 1;
  std::optional<Sweep> sweep;
  bool compute_eye = false;
  unsigned threads = 0;  // execution only; 0 = hardware concurrency

  /// Throws ConfigError (wrapping the nested validation message) if invalid.
  void validate() const;

  /// Sets the swept field to value.
  void apply(SweepParameter parameter, double value);

  /// 100 runs of 10^5 symbols.
  void apply_full_scale();
};

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every field that affects results (threads excluded).
std::string canonical_json(const ExperimentConfig& cfg);

/// 16 hex digits of FNV-1a over canonical_json.
std::string fingerprint(const ExperimentConfig& cfg);

}  // namespace mcsync
