#include "cdd/noise.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cdd {

void OuSpec::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("OU tau must be positive");
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("OU diffusion c must be >= 0");
}

OuProcess ou_step(const OuProcess& p, double dt, double n) {
  if (!(dt > 0.0)) throw std::invalid_argument("ou_step: dt must be positive");
  p.spec.validate();
  const double decay = std::exp(-dt / p.spec.tau);
  // -expm1 keeps the kick accurate when dt << tau.
  const double kick = std::sqrt(p.spec.stationary_variance() * -std::expm1(-2.0 * dt / p.spec.tau));
  return {p.spec, p.value * decay + n * kick};
}

OuStream::OuStream(const OuSpec& spec, double dt, CounterRng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("OuStream: dt must be positive");
  spec.validate();
  decay_ = std::exp(-dt / spec.tau);
  kick_ = std::sqrt(spec.stationary_variance() * -std::expm1(-2.0 * dt / spec.tau));
  value_ = std::sqrt(spec.stationary_variance()) * rng.normal();
}

std::vector<double> ou_stream(const OuSpec& spec, double dt, std::size_t n_steps, CounterRng& rng) {
  OuStream stream(spec, dt, rng);
  std::vector<double> out;
  out.reserve(n_steps + 1);
  out.push_back(stream.value());
  for (std::size_t k = 0; k < n_steps; ++k) out.push_back(stream.advance(rng));
  return out;
}

double internal_diffusion(double configured_c, NoiseUnits units) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return units == NoiseUnits::ordinary ? configured_c * two_pi * two_pi : configured_c;
}

const char* to_string(NoiseUnits units) {
  return units == NoiseUnits::ordinary ? "ordinary" : "angular";
}

OuSpec AmplitudeNoiseSpec::for_drive(double omega) const {
  return {tau, 2.0 * (relative_error * omega) * (relative_error * omega) / tau};
}

void AmplitudeNoiseSpec::validate() const {
  if (!(relative_error >= 0.0) || !std::isfinite(relative_error)) {
    throw std::invalid_argument("amplitude relative_error must be >= 0");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("amplitude tau must be positive");
}

void HyperfineEnsemble::validate() const {
  if (centers.empty() || centers.size() != weights.size()) {
    throw std::invalid_argument("hyperfine centers and weights must be non-empty and equal length");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("hyperfine weights must be non-negative");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("hyperfine weights must sum to 1");
  if (!(peak_width >= 0.0) || !std::isfinite(peak_width)) {
    throw std::invalid_argument("hyperfine peak_width must be >= 0");
  }
}

double sample_detuning(const HyperfineEnsemble& ensemble, CounterRng& rng) {
  const double u = rng.uniform();
  const double spread = ensemble.peak_width * rng.normal();
  double acc = 0.0;
  std::size_t pick = ensemble.centers.size() - 1;
  for (std::size_t i = 0; i < ensemble.weights.size(); ++i) {
    acc += ensemble.weights[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  // Zero-weight tail entries must never be chosen by round-off in acc.
  while (ensemble.weights[pick] == 0.0 && pick > 0) --pick;
  return ensemble.centers[pick] + spread;
}

}  // namespace cdd
