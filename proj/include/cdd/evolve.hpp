#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdd/drive.hpp"
#include "cdd/noise.hpp"
#include "cdd/spin.hpp"

namespace cdd {

enum class InitAxis { x, y, z };

[[nodiscard]] SpinState initial_state(InitAxis axis);
[[nodiscard]] InitAxis parse_init_axis(const std::string& text);
[[nodiscard]] const char* to_string(InitAxis axis);

/// How the drive enters the first rotating frame.
enum class DriveModel {
  canonical,  ///< small-angle RWA Hamiltonian, identical for phase and amplitude modulation
  iq,         ///< I/Q channels without the small-angle expansion (optionally sampled / jittered)
};

enum class AwgSampling { continuous, zero_order_hold };

/// Every noise source is a shift of the transition frequency, so the sz
/// coefficient of the Hamiltonian is (bath + 2 pi * detuning_MHz) / 2.
struct SimulationConfig {
  DriveScheme scheme = PhaseMod{9.0, 0.1};
  BathSpec bath;
  AmplitudeNoiseSpec amp_noise;
  HyperfineEnsemble hyperfine;
  InitAxis init_axis = InitAxis::y;
  double dt = 1.0 / 360.0;  ///< us; 1/(40 Omega1) at 9 MHz
  double duration = 10.0;   ///< us
  std::size_t n_realizations = 400;
  std::uint64_t master_seed = 1;
  std::size_t record_stride = 1;
  DriveModel drive_model = DriveModel::canonical;
  AwgSampling awg_sampling = AwgSampling::continuous;
  double awg_period_ns = 1.0;
  double phase_jitter_rad = 0.0;  ///< std of white per-step drive phase jitter (iq model)

  /// Checks for driven runs, including dt <= 1/(20 Omega1). Throws ConfigError.
  void validate() const;
  /// Checks for the undriven fid/echo paths (no Omega1 constraint on dt).
  void validate_undriven() const;

  [[nodiscard]] std::size_t n_steps() const;
  [[nodiscard]] std::size_t n_records() const { return n_steps() / record_stride + 1; }
  /// FNV-1a over a canonical text rendering of every field.
  [[nodiscard]] std::uint64_t hash() const;
};

struct DecoherenceCurve {
  std::vector<double> times;      ///< us
  std::vector<double> fidelity;   ///< ensemble mean
  std::vector<double> std_error;  ///< sample std / sqrt(n)
  std::size_t n_realizations = 0;
  std::uint64_t config_hash = 0;

  [[nodiscard]] std::size_t size() const { return times.size(); }
};

/// Worker pool size; 0 means std::thread::hardware_concurrency().
struct ExecutionOptions {
  unsigned workers = 0;
};

/// Recorded states (every record_stride steps, starting at t = 0) of one noise
/// realization. Deterministic in (master_seed, realization_index).
[[nodiscard]] std::vector<SpinState> simulate_trajectory(const SimulationConfig& config,
                                                         std::size_t realization_index);

/// Mean and standard error of |<psi_init|psi(t)>|^2 over all realizations.
/// Bit-identical for any worker count.
[[nodiscard]] DecoherenceCurve ensemble_curve(const SimulationConfig& config,
                                              const ExecutionOptions& exec = {});

/// Free-induction decay of an equatorial state under bath + hyperfine detuning
/// only (the drive in `config` is ignored).
[[nodiscard]] DecoherenceCurve fid_curve(const SimulationConfig& config, const ExecutionOptions& exec = {});

/// Hahn-echo fidelity versus total time t with an ideal pi pulse at t/2.
/// Samples fall on even step counts: t = 2 m dt.
[[nodiscard]] DecoherenceCurve hahn_echo_curve(const SimulationConfig& config,
                                               const ExecutionOptions& exec = {});

void write_curve_csv(const DecoherenceCurve& curve, std::ostream& out);

// ---------------------------------------------------------------------------
// Rotating-frame checks

struct FrameDeviation {
  double max_bloch_distance = 0.0;  ///< max |n_a - n_b| over the window
  double max_trace_distance = 0.0;  ///< half the Bloch distance for pure states
  std::size_t steps = 0;
};

/// Evolves +y under the untruncated lab-frame Hamiltonian and under the
/// rotating-wave first-frame Hamiltonian (exact I/Q channels, which equals the
/// canonical form for single and amplitude-modulated drives) mapped back by
/// exp(-i w0 t sz / 2), and
/// reports the largest disagreement. Noiseless. dt_lab must resolve the
/// carrier: dt_lab <= 1/(20 w0) with w0 in MHz.
[[nodiscard]] FrameDeviation verify_rwa(const LabFrameParams& params, double window_us, double dt_lab_us);

/// Evolves +y under the canonical first-frame Hamiltonian with constant
/// dOmega1 (rad/us), maps it into the frame rotating at Omega1 about x, and
/// compares with exact evolution under the second-frame Hamiltonian
///   H_I2 = -(Omega2/2) sz + (dOmega1/2) sx.
[[nodiscard]] FrameDeviation verify_second_frame(const DriveScheme& scheme, double d_omega1, double horizon_us,
                                                 double dt_us = 0.0);

}  // namespace cdd
