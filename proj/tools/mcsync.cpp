// mcsync command line: channel curves, single-point runs, sweeps and eye diagrams.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "mcsync/config.hpp"
#include "mcsync/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::string> backend;
  std::optional<std::uint64_t> seed;
  bool full_scale = false;
};

mcsync::ExperimentConfig resolve(const Common& c) {
  mcsync::ExperimentConfig cfg = c.config.empty() ? mcsync::ExperimentConfig{} : mcsync::load_config(c.config);
  if (c.backend) cfg.backend = mcsync::parse_backend(*c.backend);
  if (c.seed) cfg.seed_base = *c.seed;
  if (c.full_scale) cfg.apply_full_scale();
  cfg.validate();
  return cfg;
}

fs::path summary_path(const fs::path& out) {
  fs::path p = out;
  p.replace_extension(".summary.json");
  return p;
}

json versions() {
  return {{"mcsync", MCSYNC_VERSION},
          {"compiler", fmt::format("gcc {}.{}.{}", __GNUC__, __GNUC_MINOR__, __GNUC_PATCHLEVEL__)},
          {"boost", BOOST_LIB_VERSION},
          {"fmt", FMT_VERSION},
          {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                        NLOHMANN_JSON_VERSION_PATCH)}};
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_summary(const fs::path& out, const std::string& command, const mcsync::ExperimentConfig* cfg,
                   json results, std::vector<std::string> outputs, double wall_s) {
  json s = {{"command", command}, {"versions", versions()}, {"wall_time_s", wall_s},
            {"outputs", outputs},  {"results", std::move(results)}};
  if (cfg) {
    s["config_fingerprint"] = mcsync::fingerprint(*cfg);
    s["config"] = json::parse(mcsync::canonical_json(*cfg));
  } else {
    s["config_fingerprint"] = nullptr;
  }
  mcsync::write_file_atomically(summary_path(out), s.dump(2) + "\n");
}

void add_common(CLI::App* app, Common& c, bool needs_config) {
  auto* opt = app->add_option("--config", c.config, "flat JSON config")->check(CLI::ExistingFile);
  if (needs_config) opt->required();
  app->add_option("--out", c.out, "output CSV path")->required();
  app->add_option("--backend", c.backend, "analytic_sample | particle");
  app->add_option("--seed", c.seed, "overrides seed_base");
  app->add_flag("--full-scale", c.full_scale, "100 runs of 10^5 symbols");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Molecular communication synchronization simulator"};
  app.require_subcommand(1);

  Common curves_opts, run_opts, sweep_opts, eye_opts;
  double t_max = 2.0, dt = 1e-4;
  std::vector<double> curve_d = {79.4, 158.8, 520.0};
  double curve_r = 4.0, curve_dist = 4.0;
  double eye_fraction = 1.0;

  auto* curves = app.add_subcommand("curves", "hitting rate and cumulative fraction curves");
  curves->add_option("--out", curves_opts.out, "output CSV path")->required();
  curves->add_option("--config", curves_opts.config, "accepted for symmetry; geometry comes from --radius/--distance");
  curves->add_option("--t-max", t_max, "end of the time grid, s");
  curves->add_option("--dt", dt, "grid step, s");
  curves->add_option("--radius", curve_r, "receiver radius, um");
  curves->add_option("--distance", curve_dist, "transmitter to receiver surface distance, um");
  curves->add_option("--diffusion", curve_d, "diffusion coefficients, um^2/s");

  auto* run = app.add_subcommand("run", "independent runs at one parameter point");
  add_common(run, run_opts, true);
  auto* sweep = app.add_subcommand("sweep", "runs over the configured sweep values");
  add_common(sweep, sweep_opts, true);
  auto* eye = app.add_subcommand("eye", "eye diagrams of run 0 (synced and fixed clock)");
  add_common(eye, eye_opts, true);
  eye->add_option("--sample-fraction", eye_fraction, "sampling instant as a fraction of the span");

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  try {
    if (*curves) {
      mcsync::ChannelGeometry geom{curve_r, curve_dist};
      std::ostringstream os;
      mcsync::write_channel_curves(geom, curve_d, t_max, dt, os);
      mcsync::write_file_atomically(curves_opts.out, os.str());
      json results = json::array();
      for (double D : curve_d) {
        results.push_back({{"D_um2_s", D},
                           {"peak_time_s", mcsync::peak_time(geom, D)},
                           {"capture_probability", geom.capture_probability()}});
      }
      write_summary(curves_opts.out, "curves", nullptr, results, {curves_opts.out}, wall());
    } else if (*run) {
      const auto cfg = resolve(run_opts);
      const auto outcomes = mcsync::run_batch(cfg);
      std::ostringstream os;
      mcsync::write_runs_csv(outcomes, os);
      mcsync::write_file_atomically(run_opts.out, os.str());
      const auto row = mcsync::aggregate(cfg, outcomes, std::nan(""));
      json results = {{"ser_proposed", row.ser_proposed},       {"ser_proposed_stderr", row.ser_proposed_stderr},
                      {"ser_baseline", row.ser_baseline},       {"ser_baseline_stderr", row.ser_baseline_stderr},
                      {"e_bar", row.e_bar},                     {"erasure_rate", row.erasure_rate},
                      {"threshold_rule", row.threshold_rule},   {"threshold", row.threshold},
                      {"runs", row.runs},                       {"symbols_per_run", row.symbols_per_run}};
      write_summary(run_opts.out, "run", &cfg, results, {run_opts.out}, wall());
      std::cout << fmt::format("SER proposed {:.5f} (+/- {:.5f})  baseline {:.5f}  e_bar {:.4f}\n",
                               row.ser_proposed, row.ser_proposed_stderr, row.ser_baseline, row.e_bar);
    } else if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      const auto rows = mcsync::run_sweep(cfg);
      std::ostringstream os;
      mcsync::write_results_csv(rows, os);
      mcsync::write_file_atomically(sweep_opts.out, os.str());
      json results = json::array();
      for (const auto& r : rows) {
        results.push_back({{"sweep_value", number_or_null(r.sweep_value)},
                           {"ser_proposed", r.ser_proposed},
                           {"ser_baseline", r.ser_baseline},
                           {"e_bar", r.e_bar}});
        std::cout << fmt::format("{}={}  SER proposed {:.5f}  baseline {:.5f}  e_bar {:.4f}\n", r.sweep_parameter,
                                 r.sweep_value, r.ser_proposed, r.ser_baseline, r.e_bar);
      }
      write_summary(sweep_opts.out, "sweep", &cfg, results, {sweep_opts.out}, wall());
    } else if (*eye) {
      const auto cfg = resolve(eye_opts);
      const auto realization = mcsync::realize(cfg, 0);
      const auto pair = mcsync::eye_pair(cfg, realization, 0, eye_fraction);
      fs::path fixed_out = eye_opts.out;
      fixed_out.replace_extension();
      fixed_out += "_fixed_clock.csv";
      std::ostringstream a, b;
      mcsync::write_eye_csv(pair.proposed, a);
      mcsync::write_eye_csv(pair.baseline, b);
      mcsync::write_file_atomically(eye_opts.out, a.str());
      mcsync::write_file_atomically(fixed_out, b.str());
      json results = {{"span_s", pair.span_s},
                      {"sample_fraction", eye_fraction},
                      {"eye_height_proposed", pair.proposed.eye_height},
                      {"eye_width_proposed_s", pair.proposed.eye_width},
                      {"eye_height_fixed_clock", pair.baseline.eye_height},
                      {"eye_width_fixed_clock_s", pair.baseline.eye_width}};
      write_summary(eye_opts.out, "eye", &cfg, results, {eye_opts.out, fixed_out.string()}, wall());
      std::cout << fmt::format("eye height {:.4f} width {:.4f} s (fixed clock {:.4f}, {:.4f} s)\n",
                               pair.proposed.eye_height, pair.proposed.eye_width, pair.baseline.eye_height,
                               pair.baseline.eye_width);
    }
  } catch (const std::exception& e) {
    std::cerr << "mcsync: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
