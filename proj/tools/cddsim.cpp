// cddsim: command-line front end for the decoupling simulator.
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdd/analysis.hpp"
#include "cdd/config.hpp"
#include "cdd/errors.hpp"
#include "cdd/evolve.hpp"
#include "cdd/format.hpp"
#include "cdd/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr const char* kWorkersEnv = "CDDSIM_WORKERS";

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> alphas;
  std::string init_axis;
  bool fit = false;
  std::string ratios;
  std::optional<double> window;
};

/// Flag wins, then the environment, then hardware concurrency.
unsigned worker_count(const CommonOptions& opt) {
  if (opt.workers) return cdd::resolve_workers(*opt.workers);
  if (const char* env = std::getenv(kWorkersEnv); env && *env) {
    const std::string text(env);
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      throw cdd::ConfigError(kWorkersEnv, "expected a non-negative integer, got '" + text + "'");
    }
    return cdd::resolve_workers(value);
  }
  return cdd::resolve_workers(0);
}

cdd::AppConfig resolve_config(const CommonOptions& opt) {
  cdd::AppConfig cfg = opt.config_path.empty() ? cdd::AppConfig{} : cdd::load_config(opt.config_path);
  if (opt.seed) cfg.sim.master_seed = *opt.seed;
  if (!opt.init_axis.empty()) {
    try {
      cfg.sim.init_axis = cdd::parse_init_axis(opt.init_axis);
    } catch (const std::invalid_argument& e) {
      throw cdd::ConfigError("--init-axis", e.what());
    }
  }
  if (opt.alphas) cfg.scan_alphas = cdd::parse_list("--alphas", *opt.alphas);
  if (!opt.ratios.empty()) cfg.verify.carrier_ratios = cdd::parse_list("--ratios", opt.ratios);
  if (opt.window) {
    if (!(*opt.window > 0.0)) throw cdd::ConfigError("--window", "must be positive");
    cfg.verify.window_us = *opt.window;
  }
  return cfg;
}

class Run {
 public:
  Run(std::string command, const CommonOptions& opt)
      : opt_(opt), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.config = resolve_config(opt);
    manifest_.workers = worker_count(opt);
  }

  cdd::AppConfig& config() { return manifest_.config; }
  cdd::ExecutionOptions exec() const { return {manifest_.workers}; }
  json& results() { return results_; }

  template <class Writer>
  void emit(const std::string& name, Writer&& writer) {
    fs::create_directories(opt_.out_dir);
    const fs::path path = fs::path(opt_.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    writer(out);
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
    manifest_.outputs.push_back(name);
  }

  void finish() {
    emit("config.ini", [&](std::ostream& out) { out << cdd::to_ini(manifest_.config); });
    manifest_.outputs.push_back("manifest.json");
    manifest_.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_.notes_json = results_.dump();
    fs::create_directories(opt_.out_dir);
    std::ofstream out(fs::path(opt_.out_dir) / "manifest.json", std::ios::binary);
    out << cdd::manifest_json(manifest_);
    if (!out) throw std::runtime_error("write to manifest.json failed");
  }

 private:
  const CommonOptions& opt_;
  cdd::RunManifest manifest_;
  json results_ = json::object();
  std::chrono::steady_clock::time_point start_;
};

json fit_json(const cdd::DecayFit& fit) {
  return {{"method", cdd::to_string(fit.method)}, {"T_decay_us", fit.T_decay},   {"T_stderr_us", fit.T_stderr},
          {"amplitude", fit.amplitude},           {"offset", fit.offset},        {"residual_rms", fit.residual_rms},
          {"initial_T_us", fit.initial_T},        {"n_points", fit.n_points}};
}

void write_curve(Run& run, const std::string& name, const cdd::DecoherenceCurve& curve) {
  run.emit(name, [&](std::ostream& out) { cdd::write_curve_csv(curve, out); });
}

int cmd_simulate(const CommonOptions& opt) {
  Run run("simulate", opt);
  const cdd::SimulationConfig& sim = run.config().sim;
  sim.validate();
  const cdd::DecoherenceCurve curve = cdd::ensemble_curve(sim, run.exec());
  write_curve(run, "curve.csv", curve);
  int status = 0;
  if (opt.fit) {
    try {
      const cdd::DecayFit fit = cdd::fit_decay(curve, cdd::default_fit_method(sim.init_axis, sim.scheme));
      run.results()["fit"] = fit_json(fit);
      std::cout << "T_decay = " << cdd::format_double(fit.T_decay) << " us\n";
    } catch (const cdd::FitError& e) {
      run.results()["fit_error"] = e.what();
      std::cerr << "cddsim: " << e.what() << '\n';
      status = kExitRuntime;
    }
  }
  run.finish();
  return status;
}

int cmd_scan(const CommonOptions& opt) {
  Run run("scan", opt);
  cdd::AppConfig& cfg = run.config();
  if (cfg.scan_alphas.empty()) throw cdd::ConfigError("scan.alphas", "alpha list is empty");
  for (std::size_t i = 0; i < cfg.scan_alphas.size(); ++i) {
    if (!(cfg.scan_alphas[i] >= 0.0)) throw cdd::ConfigError("scan.alphas", "alphas must be >= 0");
    if (i > 0 && !(cfg.scan_alphas[i] > cfg.scan_alphas[i - 1])) {
      throw cdd::ConfigError("scan.alphas", "alphas must be strictly increasing");
    }
  }
  cfg.sim.validate();
  for (double a : cfg.scan_alphas) {
    try {
      cdd::validate(cdd::with_alpha(cfg.sim.scheme, a));
    } catch (const std::invalid_argument& e) {
      throw cdd::ConfigError("scan.alphas", e.what());
    }
  }
  const cdd::AlphaScanResult scan = cdd::scan_alpha(cfg.sim, cfg.scan_alphas, cfg.sim.init_axis, run.exec());
  run.emit("scan.csv", [&](std::ostream& out) { cdd::write_scan_csv(scan, out); });

  json points = json::array();
  for (const auto& p : scan.points) {
    json row{{"alpha", p.alpha}, {"ok", p.ok}};
    if (p.ok) {
      row["fit"] = fit_json(p.fit);
    } else {
      row["error"] = p.error;
    }
    points.push_back(row);
  }
  run.results()["init_axis"] = cdd::to_string(scan.init_axis);
  run.results()["points"] = points;
  run.finish();
  return 0;
}

int cmd_fid(const CommonOptions& opt) {
  Run run("fid", opt);
  cdd::SimulationConfig& sim = run.config().sim;
  if (opt.init_axis.empty()) sim.init_axis = cdd::InitAxis::x;
  sim.validate_undriven();
  const cdd::DecoherenceCurve curve = cdd::fid_curve(sim, run.exec());
  write_curve(run, "fid.csv", curve);
  int status = 0;
  try {
    const cdd::DecayFit fit = cdd::fit_fid_envelope(curve, sim.hyperfine);
    run.results()["fit"] = fit_json(fit);
    std::cout << "T2* = " << cdd::format_double(fit.T_decay) << " us\n";
  } catch (const cdd::FitError& e) {
    run.results()["fit_error"] = e.what();
    std::cerr << "cddsim: " << e.what() << '\n';
    status = kExitRuntime;
  }
  run.finish();
  return status;
}

int cmd_echo(const CommonOptions& opt) {
  Run run("echo", opt);
  cdd::SimulationConfig& sim = run.config().sim;
  if (opt.init_axis.empty()) sim.init_axis = cdd::InitAxis::x;
  sim.validate_undriven();
  const cdd::DecoherenceCurve curve = cdd::hahn_echo_curve(sim, run.exec());
  write_curve(run, "echo.csv", curve);
  int status = 0;
  try {
    // Fidelity decays toward 1/2; report where the coherence (2F - 1) reaches 1/e.
    const double t_e = cdd::crossing_time(curve, std::exp(-1.0), 0.5);
    run.results()["T2_echo_us"] = t_e;
    std::cout << "T2(echo) = " << cdd::format_double(t_e) << " us\n";
  } catch (const cdd::FitError& e) {
    run.results()["fit_error"] = e.what();
    std::cerr << "cddsim: " << e.what() << '\n';
    status = kExitRuntime;
  }
  run.finish();
  return status;
}

int cmd_waveform(const CommonOptions& opt) {
  Run run("waveform", opt);
  const cdd::AppConfig& cfg = run.config();
  cdd::validate(cfg.sim.scheme);
  const double duration = cfg.waveform.duration_us;
  const double period = cfg.waveform.sample_period_ns;
  if (!(duration > 0.0)) throw cdd::ConfigError("waveform.duration_us", "must be positive");
  if (!(period > 0.0)) throw cdd::ConfigError("waveform.sample_period_ns", "must be positive");
  cdd::IqWaveform wave;
  try {
    wave = cdd::compile_iq(cfg.sim.scheme, duration, period);
  } catch (const std::invalid_argument& e) {
    throw cdd::ConfigError("waveform", e.what());
  }
  run.emit("iq.csv", [&](std::ostream& out) { cdd::write_iq_csv(wave, out); });
  run.emit("iq.json", [&](std::ostream& out) { out << cdd::iq_metadata_json(cfg.sim.scheme, wave, duration); });
  run.results()["n_samples"] = wave.size();
  run.finish();
  return 0;
}

int cmd_verify(const CommonOptions& opt) {
  Run run("verify", opt);
  const cdd::AppConfig& cfg = run.config();
  const cdd::VerifySettings& v = cfg.verify;
  const double omega1 = cdd::omega1_mhz(cfg.sim.scheme);
  if (v.carrier_ratios.empty()) throw cdd::ConfigError("verify.carrier_ratios", "list is empty");
  for (double r : v.carrier_ratios) {
    if (!(r > 0.0)) throw cdd::ConfigError("verify.carrier_ratios", "ratios must be positive");
  }
  if (v.window_us < 0.0) throw cdd::ConfigError("verify.window_us", "must be >= 0 (0: one Rabi period)");
  if (!(v.lab_steps_per_carrier >= 20.0)) throw cdd::ConfigError("verify.lab_steps_per_carrier", "must be >= 20");
  if (!(v.horizon_periods > 0.0)) throw cdd::ConfigError("verify.horizon_periods", "must be positive");
  if (!std::isfinite(v.d_omega1_relative)) throw cdd::ConfigError("verify.d_omega1_relative", "must be finite");
  const double window = v.window_us > 0.0 ? v.window_us : 1.0 / omega1;

  // Lab versus first rotating frame, one row per carrier ratio.
  std::vector<cdd::FrameDeviation> rwa;
  for (double r : v.carrier_ratios) {
    cdd::LabFrameParams params{r * omega1, cfg.sim.scheme};
    try {
      params.validate();
    } catch (const std::invalid_argument& e) {
      throw cdd::ConfigError("verify.carrier_ratios", e.what());
    }
    rwa.push_back(cdd::verify_rwa(params, window, 1.0 / (v.lab_steps_per_carrier * params.carrier_mhz)));
  }
  bool rwa_ok = true;
  run.emit("verify_rwa.csv", [&](std::ostream& out) {
    out << "carrier_ratio,max_bloch_deviation,pass\n";
    for (std::size_t i = 0; i < rwa.size(); ++i) {
      const bool pass = i == 0 || rwa[i].max_bloch_distance < rwa[i - 1].max_bloch_distance;
      rwa_ok = rwa_ok && pass;
      out << cdd::format_double(v.carrier_ratios[i]) << ',' << cdd::format_double(rwa[i].max_bloch_distance) << ','
          << (pass ? 1 : 0) << '\n';
    }
  });

  // Second frame at each alpha with a constant amplitude offset.
  const double d_omega1 = 2.0 * std::numbers::pi * omega1 * v.d_omega1_relative;
  const double horizon = v.horizon_periods / omega1;
  std::vector<double> second;
  for (double a : v.alphas) {
    cdd::DriveScheme scheme = cdd::PhaseMod{omega1, a};
    try {
      cdd::validate(scheme);
    } catch (const std::invalid_argument& e) {
      throw cdd::ConfigError("verify.alphas", e.what());
    }
    second.push_back(cdd::verify_second_frame(scheme, d_omega1, horizon).max_bloch_distance);
  }
  bool second_ok = true;
  run.emit("verify_second_frame.csv", [&](std::ostream& out) {
    out << "alpha,max_bloch_deviation,pass\n";
    for (std::size_t i = 0; i < second.size(); ++i) {
      const bool pass = i == 0 || second[i] > second[i - 1];
      second_ok = second_ok && pass;
      out << cdd::format_double(v.alphas[i]) << ',' << cdd::format_double(second[i]) << ',' << (pass ? 1 : 0)
          << '\n';
    }
  });

  run.results()["window_us"] = window;
  run.results()["rwa_monotone"] = rwa_ok;
  run.results()["second_frame_monotone"] = second_ok;
  run.finish();
  if (!rwa_ok) std::cerr << "cddsim: lab-frame deviation is not decreasing with the carrier ratio\n";
  if (!second_ok) std::cerr << "cddsim: second-frame deviation is not increasing with alpha\n";
  return rwa_ok && second_ok ? 0 : kExitRuntime;
}

void add_common(CLI::App* sub, CommonOptions& opt) {
  sub->add_option("--config", opt.config_path, "INI configuration file (defaults: built-in parameter set)");
  sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  sub->add_option("--seed", opt.seed, "master seed (overrides run.seed)");
  sub->add_option("--workers", opt.workers, std::string("worker threads; 0 = all cores (env ") + kWorkersEnv + ")");
  sub->add_option("--alphas", opt.alphas, "comma-separated modulation strengths (overrides scan.alphas)");
  sub->add_option("--init-axis", opt.init_axis, "initial Bloch axis: x, y or z");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo simulator for continuously driven, modulated spin decoupling"};
  app.set_version_flag("--version", cdd::kVersion);
  app.require_subcommand(1);

  CommonOptions opt;
  auto* simulate = app.add_subcommand("simulate", "ensemble fidelity curve -> curve.csv");
  auto* scan = app.add_subcommand("scan", "decay time versus alpha -> scan.csv");
  auto* fid = app.add_subcommand("fid", "free-induction decay, no drive -> fid.csv");
  auto* echo = app.add_subcommand("echo", "Hahn echo, no drive -> echo.csv");
  auto* waveform = app.add_subcommand("waveform", "sampled I/Q channels -> iq.csv, iq.json");
  auto* verify = app.add_subcommand("verify", "rotating-frame checks -> verify_rwa.csv, verify_second_frame.csv");
  for (auto* sub : {simulate, scan, fid, echo, waveform, verify}) add_common(sub, opt);
  simulate->add_flag("--fit", opt.fit, "fit a decay time to the curve");
  verify->add_option("--ratios", opt.ratios, "comma-separated carrier ratios w0/Omega1");
  verify->add_option("--window", opt.window, "comparison window in us");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (scan->parsed()) return cmd_scan(opt);
    if (fid->parsed()) return cmd_fid(opt);
    if (echo->parsed()) return cmd_echo(opt);
    if (waveform->parsed()) return cmd_waveform(opt);
    if (verify->parsed()) return cmd_verify(opt);
  } catch (const cdd::ConfigError& e) {
    std::cerr << "cddsim: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "cddsim: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
