#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "cdd/spin.hpp"

namespace cdd {

// Drive amplitudes are configured as ordinary frequencies (MHz); the
// Hamiltonian builders below return rad/us.

struct SingleDrive {
  double omega1_mhz = 9.0;
};

/// Omega1 cos[w0 t + alpha sin(Omega1 t)] sigma_x
struct PhaseMod {
  double omega1_mhz = 9.0;
  double alpha = 0.1;
};

/// Omega1 [cos(w0 t) + alpha sin(Omega1 t) cos(w0 t + pi/2)] sigma_x
struct AmpMod {
  double omega1_mhz = 9.0;
  double alpha = 0.1;
};

/// Second, independent drive of amplitude Omega2 resonant with the Rabi frequency.
struct DoubleDrive {
  double omega1_mhz = 9.0;
  double omega2_mhz = 0.45;
};

using DriveScheme = std::variant<SingleDrive, PhaseMod, AmpMod, DoubleDrive>;

[[nodiscard]] double omega1_mhz(const DriveScheme& scheme);
/// Modulation strength alpha = 2 Omega2 / Omega1 (0 for SingleDrive).
[[nodiscard]] double modulation_strength(const DriveScheme& scheme);
[[nodiscard]] double omega2_mhz(const DriveScheme& scheme);
[[nodiscard]] std::string scheme_name(const DriveScheme& scheme);
/// name is one of single, phase, amp, double.
[[nodiscard]] DriveScheme make_scheme(const std::string& name, double omega1_mhz, double alpha);
/// Same scheme kind and Omega1, different alpha.
[[nodiscard]] DriveScheme with_alpha(const DriveScheme& scheme, double alpha);
void validate(const DriveScheme& scheme);

/// alpha sin(2 pi Omega1 t), radians. t in us, Omega1 in MHz.
[[nodiscard]] double phase_waveform(double t, double alpha, double omega1_mhz);

/// Canonical first-rotating-frame Hamiltonian (RWA applied, small-angle modulation):
///   ((Omega1 + dOmega1)/2) sx + (Omega2 + dOmega2) sin(Omega1 t) sy + (f + detuning) sz
/// with Omega2 = alpha Omega1 / 2 and dOmega2 = (Omega2/Omega1) dOmega1. The sy
/// term is absent for SingleDrive. d_omega1, f and detuning are in rad/us and
/// enter exactly as written; the caller decides how physical noise maps onto
/// the sz coefficient.
[[nodiscard]] PauliVector rotating_frame_hamiltonian(const DriveScheme& scheme, double t,
                                                     double d_omega1, double f, double detuning);

struct IqSample {
  double i = 1.0;
  double q = 0.0;
};

/// Baseband I/Q channels: [1, alpha sin(Omega1 t)] for amplitude modulation,
/// {cos[alpha sin(Omega1 t)], sin[alpha sin(Omega1 t)]} for phase modulation.
[[nodiscard]] IqSample iq_sample(const DriveScheme& scheme, double t, double phase_offset = 0.0);

/// iq_sample evaluated at the start of the AWG sample containing t.
[[nodiscard]] IqSample iq_sample_held(const DriveScheme& scheme, double t, double sample_period_ns,
                                      double phase_offset = 0.0);

/// First-frame Hamiltonian of an I/Q-mixed carrier without the small-angle
/// expansion: ((Omega1 + dOmega1)/2)(I sx + Q sy) + (f + detuning) sz.
[[nodiscard]] PauliVector iq_frame_hamiltonian(const DriveScheme& scheme, const IqSample& iq,
                                               double d_omega1, double f, double detuning);

struct LabFrameParams {
  double carrier_mhz = 2870.0;  ///< omega0 as an ordinary frequency
  DriveScheme scheme = SingleDrive{};

  void validate() const;
  /// False when omega0 < 10 Omega1, where the rotating-wave picture is poor.
  [[nodiscard]] bool rwa_regime() const;
};

/// Untruncated lab-frame Hamiltonian
///   (w0/2 + f) sz + (Omega1 + dOmega1) [I(t) cos(w0 t) - Q(t) sin(w0 t)] sx,
/// which is the phase-modulated cosine for PhaseMod and the two-tone carrier for AmpMod.
[[nodiscard]] PauliVector lab_frame_hamiltonian(const LabFrameParams& params, double t, double d_omega1,
                                                double f);

struct IqWaveform {
  double sample_period_ns = 1.0;
  std::vector<double> i_samples;
  std::vector<double> q_samples;

  [[nodiscard]] std::size_t size() const { return i_samples.size(); }
};

/// Samples k = 0 .. round(duration/sample_period) - 1 at t_k = k * sample_period.
/// Throws std::invalid_argument for non-positive inputs or a sample count beyond 2^31.
[[nodiscard]] IqWaveform compile_iq(const DriveScheme& scheme, double duration_us,
                                    double sample_period_ns = 1.0);

/// `i,q` header then one row per sample.
void write_iq_csv(const IqWaveform& wave, std::ostream& out);
/// JSON sidecar describing the waveform.
[[nodiscard]] std::string iq_metadata_json(const DriveScheme& scheme, const IqWaveform& wave,
                                           double duration_us);

}  // namespace cdd
