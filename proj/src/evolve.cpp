#include "cdd/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cdd/errors.hpp"
#include "cdd/format.hpp"
#include "cdd/parallel.hpp"

namespace cdd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Gauss-Legendre nodes of the two-point rule on [0, 1].
const double kNodeEarly = 0.5 - std::sqrt(3.0) / 6.0;
const double kNodeLate = 0.5 + std::sqrt(3.0) / 6.0;

/// Per-record running mean and M2 over a block of trajectories.
struct Moments {
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit Moments(std::size_t n_records) : mean(n_records, 0.0), m2(n_records, 0.0) {}

  void add(std::size_t record, double x) {
    // count has already been bumped for the current trajectory.
    const double delta = x - mean[record];
    mean[record] += delta / static_cast<double>(count);
    m2[record] += delta * (x - mean[record]);
  }

  /// Chan et al. pairwise combination.
  void merge(const Moments& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double n = na + nb;
    for (std::size_t r = 0; r < mean.size(); ++r) {
      const double delta = other.mean[r] - mean[r];
      mean[r] += delta * nb / n;
      m2[r] += other.m2[r] + delta * delta * na * nb / n;
    }
    count += other.count;
  }
};

/// The block partition depends only on the realization count, never on the
/// worker count, so the reduction order is fixed.
std::size_t block_size_for(std::size_t n_realizations) {
  return std::max<std::size_t>(8, (n_realizations + 63) / 64);
}

template <class TrajectoryFn>
DecoherenceCurve reduce_ensemble(std::size_t n_realizations, std::size_t n_records, unsigned workers,
                                 TrajectoryFn&& run_one) {
  const std::size_t block = block_size_for(n_realizations);
  const std::size_t n_blocks = (n_realizations + block - 1) / block;
  std::vector<Moments> partial(n_blocks, Moments(n_records));

  parallel_for(n_blocks, workers, [&](std::size_t b) {
    Moments& acc = partial[b];
    const std::size_t end = std::min(n_realizations, (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) {
      ++acc.count;
      run_one(i, [&](std::size_t record, double value) { acc.add(record, value); });
    }
  });

  Moments total(n_records);
  for (const Moments& m : partial) total.merge(m);

  DecoherenceCurve curve;
  curve.n_realizations = n_realizations;
  curve.fidelity = std::move(total.mean);
  curve.std_error.resize(n_records, 0.0);
  if (n_realizations > 1) {
    const double n = static_cast<double>(n_realizations);
    for (std::size_t r = 0; r < n_records; ++r) {
      curve.std_error[r] = std::sqrt(std::max(0.0, total.m2[r]) / (n - 1.0) / n);
    }
  }
  return curve;
}

template <class RecordFn>
void run_trajectory(const SimulationConfig& config, std::size_t index, RecordFn&& record) {
  const SpinState init = initial_state(config.init_axis);
  CounterRng rng = CounterRng::for_stream(config.master_seed, index);

  const double detuning = std::numbers::pi * sample_detuning(config.hyperfine, rng);  // (2 pi delta) / 2
  const double dt = config.dt;
  const double w1 = kTwoPi * omega1_mhz(config.scheme);
  OuStream bath(config.bath.internal(), dt, rng);
  OuStream amp(config.amp_noise.for_drive(w1), dt, rng);

  const bool iq_model = config.drive_model == DriveModel::iq;
  const bool held = config.awg_sampling == AwgSampling::zero_order_hold;

  SpinState state = init;
  record(0, state);
  const std::size_t n_steps = config.n_steps();
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double f = 0.5 * bath.value();
    const double d_omega1 = amp.value();

    PauliVector h;
    if (iq_model) {
      const double jitter = config.phase_jitter_rad > 0.0 ? config.phase_jitter_rad * rng.normal() : 0.0;
      auto at = [&](double tn) {
        const IqSample iq = held ? iq_sample_held(config.scheme, tn, config.awg_period_ns, jitter)
                                 : iq_sample(config.scheme, tn, jitter);
        return iq_frame_hamiltonian(config.scheme, iq, d_omega1, f, detuning);
      };
      h = magnus4(at(t + kNodeEarly * dt), at(t + kNodeLate * dt), dt);
    } else {
      h = magnus4(rotating_frame_hamiltonian(config.scheme, t + kNodeEarly * dt, d_omega1, f, detuning),
                  rotating_frame_hamiltonian(config.scheme, t + kNodeLate * dt, d_omega1, f, detuning), dt);
    }
    state = propagate_step(state, h, dt);
    bath.advance(rng);
    amp.advance(rng);
    if ((k + 1) % config.record_stride == 0) record((k + 1) / config.record_stride, state);
  }
}

std::vector<double> record_times(std::size_t n_records, double spacing) {
  std::vector<double> times(n_records);
  for (std::size_t r = 0; r < n_records; ++r) times[r] = static_cast<double>(r) * spacing;
  return times;
}

void validate_common(const SimulationConfig& c) {
  validate(c.scheme);
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("run.dt_us", "dt must be positive");
  if (!(c.duration > 0.0) || !std::isfinite(c.duration)) {
    throw ConfigError("run.duration_us", "duration must be positive");
  }
  if (c.duration < c.dt) throw ConfigError("run.duration_us", "duration shorter than one dt step");
  if (c.n_realizations < 1) throw ConfigError("run.n_realizations", "need at least one realization");
  if (c.record_stride < 1) throw ConfigError("run.record_stride", "stride must be >= 1");
  if (!(c.bath.tau > 0.0)) throw ConfigError("bath.tau_us", "correlation time must be positive");
  if (!(c.bath.c >= 0.0)) throw ConfigError("bath.c_mhz3", "diffusion coefficient must be >= 0");
  try {
    c.amp_noise.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("amp_noise", e.what());
  }
  try {
    c.hyperfine.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("hyperfine", e.what());
  }
}

}  // namespace

SpinState initial_state(InitAxis axis) {
  switch (axis) {
    case InitAxis::x:
      return SpinState::plus_x();
    case InitAxis::y:
      return SpinState::plus_y();
    case InitAxis::z:
      break;
  }
  return SpinState::ground();
}

InitAxis parse_init_axis(const std::string& text) {
  if (text == "x") return InitAxis::x;
  if (text == "y") return InitAxis::y;
  if (text == "z") return InitAxis::z;
  throw std::invalid_argument("init axis must be x, y or z, got '" + text + "'");
}

const char* to_string(InitAxis axis) {
  switch (axis) {
    case InitAxis::x:
      return "x";
    case InitAxis::y:
      return "y";
    case InitAxis::z:
      break;
  }
  return "z";
}

void SimulationConfig::validate() const {
  validate_common(*this);
  const double limit = 1.0 / (20.0 * omega1_mhz(scheme));
  if (dt > limit * (1.0 + 1e-12)) {
    throw ConfigError("run.dt_us", "dt = " + format_double(dt) + " us does not resolve the drive; need dt <= 1/(20 Omega1) = " +
                                       format_double(limit) + " us");
  }
  if (!(awg_period_ns > 0.0)) throw ConfigError("run.awg_period_ns", "sample period must be positive");
  if (!(phase_jitter_rad >= 0.0)) throw ConfigError("run.phase_jitter_rad", "jitter must be >= 0");
  if (phase_jitter_rad > 0.0 && drive_model != DriveModel::iq) {
    throw ConfigError("run.phase_jitter_rad", "phase jitter requires drive_model = iq");
  }
}

void SimulationConfig::validate_undriven() const {
  validate_common(*this);
  if (init_axis == InitAxis::z) {
    throw ConfigError("run.init_axis", "free-precession runs need an equatorial initial state (x or y)");
  }
}

std::size_t SimulationConfig::n_steps() const {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

std::uint64_t SimulationConfig::hash() const {
  std::ostringstream text;
  text << scheme_name(scheme) << '|' << format_double(omega1_mhz(scheme)) << '|'
       << format_double(modulation_strength(scheme)) << '|' << format_double(bath.tau) << '|'
       << format_double(bath.c) << '|' << to_string(bath.units) << '|' << format_double(amp_noise.relative_error)
       << '|' << format_double(amp_noise.tau) << '|';
  for (double c : hyperfine.centers) text << format_double(c) << ',';
  text << '|';
  for (double w : hyperfine.weights) text << format_double(w) << ',';
  text << '|' << format_double(hyperfine.peak_width) << '|' << to_string(init_axis) << '|' << format_double(dt)
       << '|' << format_double(duration) << '|' << n_realizations << '|' << master_seed << '|' << record_stride
       << '|' << static_cast<int>(drive_model) << '|' << static_cast<int>(awg_sampling) << '|'
       << format_double(awg_period_ns) << '|' << format_double(phase_jitter_rad);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<SpinState> simulate_trajectory(const SimulationConfig& config, std::size_t realization_index) {
  config.validate();
  if (realization_index >= config.n_realizations) {
    throw std::invalid_argument("realization index out of range");
  }
  std::vector<SpinState> states(config.n_records());
  run_trajectory(config, realization_index,
                 [&](std::size_t r, const SpinState& s) { states[r] = s; });
  return states;
}

DecoherenceCurve ensemble_curve(const SimulationConfig& config, const ExecutionOptions& exec) {
  config.validate();
  const std::size_t n_records = config.n_records();
  const SpinState init = initial_state(config.init_axis);
  DecoherenceCurve curve =
      reduce_ensemble(config.n_realizations, n_records, exec.workers, [&](std::size_t i, auto&& sink) {
        run_trajectory(config, i, [&](std::size_t r, const SpinState& s) { sink(r, fidelity(init, s)); });
      });
  curve.times = record_times(n_records, config.dt * static_cast<double>(config.record_stride));
  curve.config_hash = config.hash();
  return curve;
}

DecoherenceCurve fid_curve(const SimulationConfig& config, const ExecutionOptions& exec) {
  config.validate_undriven();
  const std::size_t n_steps = config.n_steps();
  const std::size_t n_records = config.n_records();
  const double dt = config.dt;
  DecoherenceCurve curve =
      reduce_ensemble(config.n_realizations, n_records, exec.workers, [&](std::size_t i, auto&& sink) {
        CounterRng rng = CounterRng::for_stream(config.master_seed, i);
        const double detuning = kTwoPi * sample_detuning(config.hyperfine, rng);
        OuStream bath(config.bath.internal(), dt, rng);
        // Relative phase of |0> and |1> advances at twice the sz coefficient,
        // i.e. at the full transition-frequency shift.
        double phase = 0.0;
        sink(0, 1.0);
        for (std::size_t k = 0; k < n_steps; ++k) {
          phase += (bath.value() + detuning) * dt;
          bath.advance(rng);
          if ((k + 1) % config.record_stride == 0) sink((k + 1) / config.record_stride, 0.5 * (1.0 + std::cos(phase)));
        }
      });
  curve.times = record_times(n_records, dt * static_cast<double>(config.record_stride));
  curve.config_hash = config.hash();
  return curve;
}

DecoherenceCurve hahn_echo_curve(const SimulationConfig& config, const ExecutionOptions& exec) {
  config.validate_undriven();
  const std::size_t half_steps = config.n_steps() / 2;
  if (half_steps < 1) throw ConfigError("run.duration_us", "echo needs at least two dt steps");
  const std::size_t n_records = half_steps / config.record_stride + 1;
  const double dt = config.dt;
  DecoherenceCurve curve =
      reduce_ensemble(config.n_realizations, n_records, exec.workers, [&](std::size_t i, auto&& sink) {
        CounterRng rng = CounterRng::for_stream(config.master_seed, i);
        const double detuning = kTwoPi * sample_detuning(config.hyperfine, rng);
        OuStream bath(config.bath.internal(), dt, rng);
        // prefix[m] = accumulated free-precession phase after m steps.
        std::vector<double> prefix(2 * half_steps + 1, 0.0);
        for (std::size_t k = 0; k < 2 * half_steps; ++k) {
          prefix[k + 1] = prefix[k] + (bath.value() + detuning) * dt;
          bath.advance(rng);
        }
        for (std::size_t r = 0; r < n_records; ++r) {
          const std::size_t m = r * config.record_stride;
          // The pi pulse at step m inverts the phase gathered so far.
          const double phase = prefix[m] - (prefix[2 * m] - prefix[m]);
          sink(r, 0.5 * (1.0 + std::cos(phase)));
        }
      });
  curve.times = record_times(n_records, 2.0 * dt * static_cast<double>(config.record_stride));
  curve.config_hash = config.hash();
  return curve;
}

void write_curve_csv(const DecoherenceCurve& curve, std::ostream& out) {
  out << "time_us,fidelity,stderr\n";
  for (std::size_t r = 0; r < curve.size(); ++r) {
    out << format_double(curve.times[r]) << ',' << format_double(curve.fidelity[r]) << ','
        << format_double(curve.std_error[r]) << '\n';
  }
}

}  // namespace cdd
