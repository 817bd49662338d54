#include "cdd/config.hpp"

#include <charconv>
#include <concepts>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "cdd/errors.hpp"
#include "cdd/format.hpp"

namespace cdd {

namespace {

namespace pt = boost::property_tree;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"scheme", {"type", "omega1_mhz", "alpha"}},
      {"bath", {"tau_us", "c_mhz3", "units"}},
      {"amp_noise", {"relative_error", "tau_us"}},
      {"hyperfine", {"centers_mhz", "weights", "peak_width_mhz"}},
      {"run",
       {"init_axis", "dt_us", "duration_us", "n_realizations", "seed", "record_stride", "drive_model",
        "awg_sampling", "awg_period_ns", "phase_jitter_rad"}},
      {"scan", {"alphas"}},
      {"waveform", {"duration_us", "sample_period_ns"}},
      {"verify",
       {"carrier_ratios", "window_us", "lab_steps_per_carrier", "alphas", "d_omega1_relative", "horizon_periods"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError(key, "expected a finite number, got '" + raw + "'");
  }
  return value;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + raw + "'");
  }
  return value;
}

/// Read-only view of one INI section.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  [[nodiscard]] std::optional<std::string> get(const std::string& key) const {
    if (!tree_) return std::nullopt;
    if (auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return trim(*v);
    return std::nullopt;
  }
  [[nodiscard]] std::string qualified(const std::string& key) const { return name_ + "." + key; }

  void read(const std::string& key, double& out) const {
    if (auto v = get(key)) out = to_double(qualified(key), *v);
  }
  template <std::unsigned_integral T>
  void read(const std::string& key, T& out) const {
    if (auto v = get(key)) out = static_cast<T>(to_unsigned(qualified(key), *v));
  }
  void read(const std::string& key, std::vector<double>& out) const {
    if (auto v = get(key)) out = parse_list(qualified(key), *v);
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
};

template <class Fn>
auto wrap_key(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

nlohmann::ordered_json frequency(double mhz) {
  return {{"mhz", mhz}, {"rad_per_us", kTwoPi * mhz}};
}

}  // namespace

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  return out;
}

AppConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", std::string("malformed INI: ") + e.message() + " (line " +
                                    std::to_string(e.line()) + ")");
  }

  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of any section");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(name, child ? &*child : nullptr);
  };

  AppConfig cfg;
  SimulationConfig& sim = cfg.sim;

  const Section scheme = section("scheme");
  std::string type = scheme.get("type").value_or("phase");
  double omega1 = 9.0;
  double alpha = 0.1;
  scheme.read("omega1_mhz", omega1);
  scheme.read("alpha", alpha);
  sim.scheme = wrap_key("scheme.type", [&] { return make_scheme(type, omega1, alpha); });
  wrap_key("scheme.omega1_mhz", [&] {
    validate(sim.scheme);
    return 0;
  });

  const Section bath = section("bath");
  bath.read("tau_us", sim.bath.tau);
  bath.read("c_mhz3", sim.bath.c);
  if (auto units = bath.get("units")) {
    if (*units == "angular") {
      sim.bath.units = NoiseUnits::angular;
    } else if (*units == "ordinary") {
      sim.bath.units = NoiseUnits::ordinary;
    } else {
      throw ConfigError("bath.units", "expected angular or ordinary, got '" + *units + "'");
    }
  }

  const Section amp = section("amp_noise");
  amp.read("relative_error", sim.amp_noise.relative_error);
  amp.read("tau_us", sim.amp_noise.tau);

  const Section hf = section("hyperfine");
  const bool has_centers = hf.get("centers_mhz").has_value();
  hf.read("centers_mhz", sim.hyperfine.centers);
  if (hf.get("weights")) {
    hf.read("weights", sim.hyperfine.weights);
    // Relative weights are accepted; an already normalized list is kept bit-exact.
    double total = 0.0;
    for (double w : sim.hyperfine.weights) {
      if (!(w >= 0.0)) throw ConfigError("hyperfine.weights", "weights must be >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw ConfigError("hyperfine.weights", "weights must not all be zero");
    if (std::abs(total - 1.0) > 1e-12) {
      for (double& w : sim.hyperfine.weights) w /= total;
    }
  } else if (has_centers) {
    sim.hyperfine.weights.assign(sim.hyperfine.centers.size(), 1.0 / static_cast<double>(sim.hyperfine.centers.size()));
  }
  hf.read("peak_width_mhz", sim.hyperfine.peak_width);

  const Section run = section("run");
  if (auto axis = run.get("init_axis")) sim.init_axis = wrap_key("run.init_axis", [&] { return parse_init_axis(*axis); });
  sim.dt = 1.0 / (40.0 * omega1_mhz(sim.scheme));
  run.read("dt_us", sim.dt);
  run.read("duration_us", sim.duration);
  run.read("n_realizations", sim.n_realizations);
  run.read("seed", sim.master_seed);
  run.read("record_stride", sim.record_stride);
  if (auto model = run.get("drive_model")) {
    if (*model == "canonical") {
      sim.drive_model = DriveModel::canonical;
    } else if (*model == "iq") {
      sim.drive_model = DriveModel::iq;
    } else {
      throw ConfigError("run.drive_model", "expected canonical or iq, got '" + *model + "'");
    }
  }
  if (auto sampling = run.get("awg_sampling")) {
    if (*sampling == "continuous") {
      sim.awg_sampling = AwgSampling::continuous;
    } else if (*sampling == "zoh") {
      sim.awg_sampling = AwgSampling::zero_order_hold;
    } else {
      throw ConfigError("run.awg_sampling", "expected continuous or zoh, got '" + *sampling + "'");
    }
  }
  run.read("awg_period_ns", sim.awg_period_ns);
  run.read("phase_jitter_rad", sim.phase_jitter_rad);

  section("scan").read("alphas", cfg.scan_alphas);

  const Section wf = section("waveform");
  wf.read("duration_us", cfg.waveform.duration_us);
  wf.read("sample_period_ns", cfg.waveform.sample_period_ns);

  const Section ver = section("verify");
  ver.read("carrier_ratios", cfg.verify.carrier_ratios);
  ver.read("window_us", cfg.verify.window_us);
  ver.read("lab_steps_per_carrier", cfg.verify.lab_steps_per_carrier);
  ver.read("alphas", cfg.verify.alphas);
  ver.read("d_omega1_relative", cfg.verify.d_omega1_relative);
  ver.read("horizon_periods", cfg.verify.horizon_periods);

  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_ini(const AppConfig& config) {
  const SimulationConfig& sim = config.sim;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
  };
  std::ostringstream out;
  out << "[scheme]\n"
      << "type = " << scheme_name(sim.scheme) << '\n'
      << "omega1_mhz = " << format_double(omega1_mhz(sim.scheme)) << '\n'
      << "alpha = " << format_double(modulation_strength(sim.scheme)) << "\n\n"
      << "[bath]\n"
      << "tau_us = " << format_double(sim.bath.tau) << '\n'
      << "c_mhz3 = " << format_double(sim.bath.c) << '\n'
      << "units = " << to_string(sim.bath.units) << "\n\n"
      << "[amp_noise]\n"
      << "relative_error = " << format_double(sim.amp_noise.relative_error) << '\n'
      << "tau_us = " << format_double(sim.amp_noise.tau) << "\n\n"
      << "[hyperfine]\n"
      << "centers_mhz = " << list(sim.hyperfine.centers) << '\n'
      << "weights = " << list(sim.hyperfine.weights) << '\n'
      << "peak_width_mhz = " << format_double(sim.hyperfine.peak_width) << "\n\n"
      << "[run]\n"
      << "init_axis = " << to_string(sim.init_axis) << '\n'
      << "dt_us = " << format_double(sim.dt) << '\n'
      << "duration_us = " << format_double(sim.duration) << '\n'
      << "n_realizations = " << sim.n_realizations << '\n'
      << "seed = " << sim.master_seed << '\n'
      << "record_stride = " << sim.record_stride << '\n'
      << "drive_model = " << (sim.drive_model == DriveModel::iq ? "iq" : "canonical") << '\n'
      << "awg_sampling = " << (sim.awg_sampling == AwgSampling::zero_order_hold ? "zoh" : "continuous") << '\n'
      << "awg_period_ns = " << format_double(sim.awg_period_ns) << '\n'
      << "phase_jitter_rad = " << format_double(sim.phase_jitter_rad) << "\n\n"
      << "[scan]\n"
      << "alphas = " << list(config.scan_alphas) << "\n\n"
      << "[waveform]\n"
      << "duration_us = " << format_double(config.waveform.duration_us) << '\n'
      << "sample_period_ns = " << format_double(config.waveform.sample_period_ns) << "\n\n"
      << "[verify]\n"
      << "carrier_ratios = " << list(config.verify.carrier_ratios) << '\n'
      << "window_us = " << format_double(config.verify.window_us) << '\n'
      << "lab_steps_per_carrier = " << format_double(config.verify.lab_steps_per_carrier) << '\n'
      << "alphas = " << list(config.verify.alphas) << '\n'
      << "d_omega1_relative = " << format_double(config.verify.d_omega1_relative) << '\n'
      << "horizon_periods = " << format_double(config.verify.horizon_periods) << '\n';
  return out.str();
}

std::string manifest_json(const RunManifest& m) {
  const SimulationConfig& sim = m.config.sim;
  const OuSpec bath = sim.bath.internal();
  const double w1 = kTwoPi * omega1_mhz(sim.scheme);

  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["command"] = m.command;
  j["master_seed"] = sim.master_seed;
  j["config_hash"] = sim.hash();

  nlohmann::ordered_json cfg;
  cfg["scheme"] = {{"type", scheme_name(sim.scheme)},
                   {"omega1", frequency(omega1_mhz(sim.scheme))},
                   {"omega2", frequency(omega2_mhz(sim.scheme))},
                   {"alpha", modulation_strength(sim.scheme)}};
  cfg["bath"] = {{"tau_us", sim.bath.tau},
                 {"c_configured_mhz3", sim.bath.c},
                 {"units", to_string(sim.bath.units)},
                 {"c_internal", bath.c},
                 {"stationary_std_rad_per_us", std::sqrt(bath.stationary_variance())},
                 {"sz_coefficient", "half the OU value (transition-frequency noise)"}};
  cfg["amp_noise"] = {{"relative_error", sim.amp_noise.relative_error},
                      {"tau_us", sim.amp_noise.tau},
                      {"c_internal", sim.amp_noise.for_drive(w1).c},
                      {"omega1_std", frequency(sim.amp_noise.relative_error * omega1_mhz(sim.scheme))}};
  nlohmann::ordered_json centers = nlohmann::ordered_json::array();
  for (double c : sim.hyperfine.centers) centers.push_back(frequency(c));
  cfg["hyperfine"] = {{"centers", centers},
                      {"weights", sim.hyperfine.weights},
                      {"peak_width", frequency(sim.hyperfine.peak_width)}};
  cfg["run"] = {{"init_axis", to_string(sim.init_axis)},
                {"dt_us", sim.dt},
                {"duration_us", sim.duration},
                {"n_realizations", sim.n_realizations},
                {"record_stride", sim.record_stride},
                {"drive_model", sim.drive_model == DriveModel::iq ? "iq" : "canonical"},
                {"awg_sampling", sim.awg_sampling == AwgSampling::zero_order_hold ? "zoh" : "continuous"},
                {"awg_period_ns", sim.awg_period_ns},
                {"phase_jitter_rad", sim.phase_jitter_rad}};
  cfg["ini"] = to_ini(m.config);
  j["config"] = cfg;
  j["workers"] = m.workers;
  j["runtime_seconds"] = m.runtime_seconds;
  j["outputs"] = m.outputs;
  j["results"] = nlohmann::ordered_json::parse(m.notes_json);
  return j.dump(2) + "\n";
}

}  // namespace cdd
