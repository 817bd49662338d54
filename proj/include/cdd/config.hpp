#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "cdd/evolve.hpp"

namespace cdd {

inline constexpr const char* kVersion = "cddsim 0.1.0";

struct WaveformSettings {
  double duration_us = 1.0;
  double sample_period_ns = 1.0;
};

struct VerifySettings {
  std::vector<double> carrier_ratios{50.0, 100.0, 200.0, 400.0};  ///< omega0 / Omega1
  double window_us = 0.0;               ///< 0: one Rabi period
  double lab_steps_per_carrier = 40.0;  ///< dt_lab = 1/(steps * omega0)
  std::vector<double> alphas{0.05, 0.1, 0.2};
  double d_omega1_relative = 0.0075;    ///< constant dOmega1 / Omega1 for the second-frame check
  double horizon_periods = 10.0;        ///< in Rabi periods
};

struct AppConfig {
  SimulationConfig sim;
  WaveformSettings waveform;
  VerifySettings verify;
  std::vector<double> scan_alphas{0.05, 0.1, 0.2, 0.3, 0.5, 0.8};
};

/// INI text with sections [scheme], [bath], [amp_noise], [hyperfine], [run],
/// [scan], [waveform], [verify]. Frequencies in MHz, times in us. Unknown
/// sections or keys and malformed values throw ConfigError naming the key.
[[nodiscard]] AppConfig parse_config(const std::string& text);
[[nodiscard]] AppConfig load_config(const std::string& path);

/// Comma-separated doubles; throws ConfigError(key) on malformed input.
[[nodiscard]] std::vector<double> parse_list(const std::string& key, const std::string& text);

/// Fully resolved configuration in the same INI format (parses back to an equal config).
[[nodiscard]] std::string to_ini(const AppConfig& config);

struct RunManifest {
  std::string command;
  AppConfig config;
  std::vector<std::string> outputs;
  double runtime_seconds = 0.0;
  unsigned workers = 1;
  std::string notes_json = "{}";  ///< command-specific results as a JSON object
};

/// JSON manifest: version, command, seed, config echo with both MHz and rad/us
/// values, worker count, runtime, outputs, results.
[[nodiscard]] std::string manifest_json(const RunManifest& manifest);

}  // namespace cdd
