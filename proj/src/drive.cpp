#include "cdd/drive.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "cdd/format.hpp"

namespace cdd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

bool has_second_drive(const DriveScheme& scheme) { return !std::holds_alternative<SingleDrive>(scheme); }

}  // namespace

double omega1_mhz(const DriveScheme& scheme) {
  return std::visit([](const auto& s) { return s.omega1_mhz; }, scheme);
}

double modulation_strength(const DriveScheme& scheme) {
  return std::visit(overloaded{[](const SingleDrive&) { return 0.0; },
                               [](const PhaseMod& s) { return s.alpha; },
                               [](const AmpMod& s) { return s.alpha; },
                               [](const DoubleDrive& s) { return 2.0 * s.omega2_mhz / s.omega1_mhz; }},
                    scheme);
}

double omega2_mhz(const DriveScheme& scheme) {
  return 0.5 * modulation_strength(scheme) * omega1_mhz(scheme);
}

std::string scheme_name(const DriveScheme& scheme) {
  return std::visit(overloaded{[](const SingleDrive&) { return std::string{"single"}; },
                               [](const PhaseMod&) { return std::string{"phase"}; },
                               [](const AmpMod&) { return std::string{"amp"}; },
                               [](const DoubleDrive&) { return std::string{"double"}; }},
                    scheme);
}

DriveScheme make_scheme(const std::string& name, double omega1, double alpha) {
  if (name == "single") return SingleDrive{omega1};
  if (name == "phase") return PhaseMod{omega1, alpha};
  if (name == "amp") return AmpMod{omega1, alpha};
  if (name == "double") return DoubleDrive{omega1, 0.5 * alpha * omega1};
  throw std::invalid_argument("unknown drive scheme '" + name + "' (expected single, phase, amp or double)");
}

DriveScheme with_alpha(const DriveScheme& scheme, double alpha) {
  return make_scheme(scheme_name(scheme), omega1_mhz(scheme), alpha);
}

void validate(const DriveScheme& scheme) {
  const double w1 = omega1_mhz(scheme);
  if (!(w1 > 0.0) || !std::isfinite(w1)) throw std::invalid_argument("Omega1 must be positive");
  const double a = modulation_strength(scheme);
  if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("alpha must be >= 0");
  if (const auto* d = std::get_if<DoubleDrive>(&scheme); d && !(d->omega2_mhz < d->omega1_mhz)) {
    throw std::invalid_argument("double drive requires Omega2 < Omega1");
  }
}

double phase_waveform(double t, double alpha, double omega1) {
  return alpha * std::sin(kTwoPi * omega1 * t);
}

PauliVector rotating_frame_hamiltonian(const DriveScheme& scheme, double t, double d_omega1, double f,
                                       double detuning) {
  const double w1 = kTwoPi * omega1_mhz(scheme);
  PauliVector h{0.0, 0.5 * (w1 + d_omega1), 0.0, f + detuning};
  if (has_second_drive(scheme)) {
    const double ratio = 0.5 * modulation_strength(scheme);  // Omega2 / Omega1
    const double w2 = ratio * w1;
    h.hy = (w2 + ratio * d_omega1) * std::sin(w1 * t);
  }
  return h;
}

IqSample iq_sample(const DriveScheme& scheme, double t, double phase_offset) {
  const double w1 = omega1_mhz(scheme);
  const double alpha = modulation_strength(scheme);
  return std::visit(overloaded{[&](const PhaseMod&) {
                                 const double phi = phase_waveform(t, alpha, w1) + phase_offset;
                                 return IqSample{std::cos(phi), std::sin(phi)};
                               },
                               [&](const auto&) {
                                 const IqSample base{1.0, phase_waveform(t, alpha, w1)};
                                 if (phase_offset == 0.0) return base;
                                 const double c = std::cos(phase_offset);
                                 const double s = std::sin(phase_offset);
                                 return IqSample{c * base.i - s * base.q, s * base.i + c * base.q};
                               }},
                    scheme);
}

IqSample iq_sample_held(const DriveScheme& scheme, double t, double sample_period_ns, double phase_offset) {
  const double period_us = sample_period_ns * 1e-3;
  return iq_sample(scheme, std::floor(t / period_us) * period_us, phase_offset);
}

PauliVector iq_frame_hamiltonian(const DriveScheme& scheme, const IqSample& iq, double d_omega1, double f,
                                 double detuning) {
  const double half = 0.5 * (kTwoPi * omega1_mhz(scheme) + d_omega1);
  return {0.0, half * iq.i, half * iq.q, f + detuning};
}

void LabFrameParams::validate() const {
  cdd::validate(scheme);
  if (!(carrier_mhz > 0.0) || !std::isfinite(carrier_mhz)) {
    throw std::invalid_argument("carrier frequency must be positive");
  }
}

bool LabFrameParams::rwa_regime() const { return carrier_mhz >= 10.0 * omega1_mhz(scheme); }

PauliVector lab_frame_hamiltonian(const LabFrameParams& params, double t, double d_omega1, double f) {
  const double w0 = kTwoPi * params.carrier_mhz;
  const double w1 = kTwoPi * omega1_mhz(params.scheme);
  const IqSample iq = iq_sample(params.scheme, t);
  const double carrier = iq.i * std::cos(w0 * t) - iq.q * std::sin(w0 * t);
  return {0.0, (w1 + d_omega1) * carrier, 0.0, 0.5 * w0 + f};
}

IqWaveform compile_iq(const DriveScheme& scheme, double duration_us, double sample_period_ns) {
  validate(scheme);
  if (!(duration_us > 0.0) || !std::isfinite(duration_us)) {
    throw std::invalid_argument("waveform duration must be positive");
  }
  if (!(sample_period_ns > 0.0) || !std::isfinite(sample_period_ns)) {
    throw std::invalid_argument("sample period must be positive");
  }
  const double count = std::round(duration_us * 1e3 / sample_period_ns);
  if (!std::isfinite(count) || count > 2147483648.0) {
    throw std::invalid_argument("waveform sample count overflows (duration / sample_period too large)");
  }
  if (count < 1.0) throw std::invalid_argument("waveform shorter than one sample");

  IqWaveform wave;
  wave.sample_period_ns = sample_period_ns;
  const auto n = static_cast<std::size_t>(count);
  wave.i_samples.resize(n);
  wave.q_samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const IqSample s = iq_sample(scheme, static_cast<double>(k) * sample_period_ns * 1e-3);
    wave.i_samples[k] = s.i;
    wave.q_samples[k] = s.q;
  }
  return wave;
}

void write_iq_csv(const IqWaveform& wave, std::ostream& out) {
  out << "i,q\n";
  for (std::size_t k = 0; k < wave.size(); ++k) {
    out << format_double(wave.i_samples[k]) << ',' << format_double(wave.q_samples[k]) << '\n';
  }
}

std::string iq_metadata_json(const DriveScheme& scheme, const IqWaveform& wave, double duration_us) {
  nlohmann::ordered_json j;
  j["scheme"] = scheme_name(scheme);
  j["omega1_mhz"] = omega1_mhz(scheme);
  j["alpha"] = modulation_strength(scheme);
  j["omega2_mhz"] = omega2_mhz(scheme);
  j["duration_us"] = duration_us;
  j["sample_period_ns"] = wave.sample_period_ns;
  j["n_samples"] = wave.size();
  return j.dump(2) + "\n";
}

}  // namespace cdd
