#include "mcsync/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace mcsync {

namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kKnownKeys = {
    "D_A",           "D_B",           "r",
    "d",             "T_s",           "sigma2_symbol",
    "delta_t",       "K",             "N_info",
    "N_sync",        "p_one",         "snr_db",
    "noise_clamp",   "smooth_window", "gate_fraction",
    "refractory_fraction", "search_horizon", "threshold",
    "e_bar_target",  "backend",       "particle_dt",
    "runs",          "seed_base",     "sweep_parameter",
    "sweep_values",  "compute_eye",   "threads",
};

ThresholdRule parse_threshold(std::string_view text) {
  if (text == "literal") return ThresholdRule::Literal;
  if (text == "calibrated") return ThresholdRule::Calibrated;
  throw ConfigError(fmt::format("unknown threshold rule '{}'", text));
}

ClampMode parse_clamp(std::string_view text) {
  if (text == "per_bin") return ClampMode::PerBin;
  if (text == "carry_deficit") return ClampMode::CarryDeficit;
  throw ConfigError(fmt::format("unknown noise_clamp '{}'", text));
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

}  // namespace

std::string_view to_string(Backend backend) noexcept {
  return backend == Backend::AnalyticSample ? "analytic_sample" : "particle";
}

std::string_view to_string(SweepParameter parameter) noexcept {
  switch (parameter) {
    case SweepParameter::SnrDb:
      return "snr_db";
    case SweepParameter::Sigma2Symbol:
      return "sigma2_symbol";
    case SweepParameter::EBarTarget:
      return "e_bar_target";
  }
  return "?";
}

std::string_view to_string(ThresholdRule rule) noexcept {
  return rule == ThresholdRule::Literal ? "literal" : "calibrated";
}

std::string_view to_string(ClampMode mode) noexcept {
  return mode == ClampMode::PerBin ? "per_bin" : "carry_deficit";
}

Backend parse_backend(std::string_view text) {
  if (text == "analytic_sample") return Backend::AnalyticSample;
  if (text == "particle") return Backend::Particle;
  throw ConfigError(fmt::format("unknown backend '{}'", text));
}

SweepParameter parse_sweep_parameter(std::string_view text) {
  if (text == "snr_db") return SweepParameter::SnrDb;
  if (text == "sigma2_symbol") return SweepParameter::Sigma2Symbol;
  if (text == "e_bar_target") return SweepParameter::EBarTarget;
  throw ConfigError(fmt::format("unknown sweep parameter '{}'", text));
}

void ExperimentConfig::validate() const {
  try {
    geometry.validate();
    molecules.validate();
    tx.validate();
    noise.validate();
    detector.validate();
    ParticleSimConfig particle{geometry, molecules.sync.diffusion_um2_s, 1, particle_dt_s, particle_dt_s, 0, 1};
    if (backend == Backend::Particle) {
      particle.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!std::isfinite(bin_width_s) || bin_width_s <= 0.0) {
    throw ConfigError("delta_t must be positive");
  }
  if (!std::isfinite(e_bar_target) || e_bar_target < 0.0) {
    throw ConfigError("e_bar_target must be finite and non-negative");
  }
  if (runs < 1) {
    throw ConfigError("runs must be at least 1");
  }
  if (sweep) {
    if (sweep->values.empty()) {
      throw ConfigError("sweep_values must not be empty");
    }
    for (double v : sweep->values) {
      if (!std::isfinite(v)) {
        throw ConfigError("sweep values must be finite");
      }
      ExperimentConfig probe = *this;
      probe.sweep.reset();
      probe.apply(sweep->parameter, v);
      probe.validate();
    }
  }
}

void ExperimentConfig::apply(SweepParameter parameter, double value) {
  switch (parameter) {
    case SweepParameter::SnrDb:
      noise.snr_db = value;
      break;
    case SweepParameter::Sigma2Symbol:
      tx.sigma2_symbol = value;
      break;
    case SweepParameter::EBarTarget:
      e_bar_target = value;
      break;
  }
}

void ExperimentConfig::apply_full_scale() {
  runs = 100;
  tx.n_symbols = 100000;
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) {
    throw ConfigError("config must be a flat JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!kKnownKeys.contains(key)) {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
    if (value.is_object()) {
      throw ConfigError(fmt::format("config key '{}' must not be nested", key));
    }
  }

  ExperimentConfig cfg;
  cfg.molecules.info.diffusion_um2_s = get(j, "D_A", cfg.molecules.info.diffusion_um2_s);
  cfg.molecules.sync.diffusion_um2_s = get(j, "D_B", cfg.molecules.sync.diffusion_um2_s);
  cfg.geometry.radius_um = get(j, "r", cfg.geometry.radius_um);
  cfg.geometry.distance_um = get(j, "d", cfg.geometry.distance_um);
  cfg.tx.symbol_duration_s = get(j, "T_s", cfg.tx.symbol_duration_s);
  cfg.tx.sigma2_symbol = get(j, "sigma2_symbol", cfg.tx.sigma2_symbol);
  cfg.bin_width_s = get(j, "delta_t", cfg.bin_width_s);
  cfg.tx.n_symbols = get(j, "K", cfg.tx.n_symbols);
  cfg.tx.n_info = get(j, "N_info", cfg.tx.n_info);
  cfg.tx.n_sync = get(j, "N_sync", cfg.tx.n_sync);
  cfg.tx.p_one = get(j, "p_one", cfg.tx.p_one);
  if (j.contains("snr_db")) {
    cfg.noise.snr_db = j.at("snr_db").is_null() ? std::numeric_limits<double>::infinity() : get(j, "snr_db", 0.0);
  }
  cfg.noise.clamp = parse_clamp(get<std::string>(j, "noise_clamp", std::string(to_string(cfg.noise.clamp))));
  cfg.detector.smooth_window = get(j, "smooth_window", cfg.detector.smooth_window);
  cfg.detector.gate_fraction = get(j, "gate_fraction", cfg.detector.gate_fraction);
  cfg.detector.refractory_fraction = get(j, "refractory_fraction", cfg.detector.refractory_fraction);
  cfg.detector.search_horizon = get(j, "search_horizon", cfg.detector.search_horizon);
  cfg.threshold = parse_threshold(get<std::string>(j, "threshold", std::string(to_string(cfg.threshold))));
  cfg.e_bar_target = get(j, "e_bar_target", cfg.e_bar_target);
  cfg.backend = parse_backend(get<std::string>(j, "backend", std::string(to_string(cfg.backend))));
  cfg.particle_dt_s = get(j, "particle_dt", cfg.particle_dt_s);
  cfg.runs = get(j, "runs", cfg.runs);
  cfg.seed_base = get(j, "seed_base", cfg.seed_base);
  cfg.compute_eye = get(j, "compute_eye", cfg.compute_eye);
  cfg.threads = get(j, "threads", cfg.threads);
  if (j.contains("sweep_parameter") != j.contains("sweep_values")) {
    throw ConfigError("sweep_parameter and sweep_values must be given together");
  }
  if (j.contains("sweep_parameter")) {
    cfg.sweep = Sweep{parse_sweep_parameter(get<std::string>(j, "sweep_parameter", "")),
                      get<std::vector<double>>(j, "sweep_values", {})};
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json j = {
      {"D_A", cfg.molecules.info.diffusion_um2_s},
      {"D_B", cfg.molecules.sync.diffusion_um2_s},
      {"r", cfg.geometry.radius_um},
      {"d", cfg.geometry.distance_um},
      {"T_s", cfg.tx.symbol_duration_s},
      {"sigma2_symbol", cfg.tx.sigma2_symbol},
      {"delta_t", cfg.bin_width_s},
      {"K", cfg.tx.n_symbols},
      {"N_info", cfg.tx.n_info},
      {"N_sync", cfg.tx.n_sync},
      {"p_one", cfg.tx.p_one},
      {"snr_db", cfg.noise.enabled() ? json(cfg.noise.snr_db) : json(nullptr)},
      {"noise_clamp", to_string(cfg.noise.clamp)},
      {"smooth_window", cfg.detector.smooth_window},
      {"gate_fraction", cfg.detector.gate_fraction},
      {"refractory_fraction", cfg.detector.refractory_fraction},
      {"search_horizon", cfg.detector.search_horizon},
      {"threshold", to_string(cfg.threshold)},
      {"e_bar_target", cfg.e_bar_target},
      {"backend", to_string(cfg.backend)},
      {"particle_dt", cfg.particle_dt_s},
      {"runs", cfg.runs},
      {"seed_base", cfg.seed_base},
      {"compute_eye", cfg.compute_eye},
  };
  if (cfg.sweep) {
    j["sweep_parameter"] = to_string(cfg.sweep->parameter);
    j["sweep_values"] = cfg.sweep->values;
  }
  return j.dump();
}

std::string fingerprint(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace mcsync
