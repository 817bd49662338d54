#pragma once

#include <cstddef>
#include <vector>

#include "cdd/rng.hpp"

namespace cdd {

/// Ornstein-Uhlenbeck parameters: correlation time tau (us) and diffusion
/// coefficient c, so that <x(t)x(t')> = (c tau / 2) exp(-|t - t'| / tau).
struct OuSpec {
  double tau = 1.0;
  double c = 0.0;

  [[nodiscard]] double stationary_variance() const { return 0.5 * c * tau; }
  void validate() const;
};

struct OuProcess {
  OuSpec spec;
  double value = 0.0;
};

/// Exact OU update over dt with the supplied unit Gaussian draw:
/// x' = x e^{-dt/tau} + n sqrt((c tau / 2)(1 - e^{-2 dt/tau})).
[[nodiscard]] OuProcess ou_step(const OuProcess& p, double dt, double n);

/// OU process advanced on a fixed grid; the decay and kick factors are cached.
class OuStream {
 public:
  /// Starts from a draw of the stationary distribution.
  OuStream(const OuSpec& spec, double dt, CounterRng& rng);

  [[nodiscard]] double value() const { return value_; }
  double advance(CounterRng& rng) { return value_ = value_ * decay_ + kick_ * rng.normal(); }

 private:
  double decay_;
  double kick_;
  double value_;
};

/// n_steps + 1 values x(0), x(dt), ..., x(n_steps dt) with x(0) stationary.
[[nodiscard]] std::vector<double> ou_stream(const OuSpec& spec, double dt, std::size_t n_steps,
                                            CounterRng& rng);

/// How the configured bath diffusion coefficient (quoted in "MHz^3") maps onto
/// the internal rad/us scale.
enum class NoiseUnits {
  angular,   ///< the number is already (rad/us)^2/us
  ordinary,  ///< the noise amplitude is in MHz; variance picks up (2 pi)^2
};

[[nodiscard]] double internal_diffusion(double configured_c, NoiseUnits units);
[[nodiscard]] const char* to_string(NoiseUnits units);

/// Spin-bath OU parameters as configured. The process models the fluctuation
/// of the transition frequency, so it enters the sz coefficient halved.
struct BathSpec {
  double tau = 10.0;         ///< us
  double c = 6.6667e-5;      ///< configured diffusion coefficient, "MHz^3"
  NoiseUnits units = NoiseUnits::angular;

  [[nodiscard]] OuSpec internal() const { return {tau, internal_diffusion(c, units)}; }
};

/// Relative drive-amplitude error modeled as OU noise on Omega1.
struct AmplitudeNoiseSpec {
  double relative_error = 0.0075;
  double tau = 500.0;

  /// c = 2 (relative_error * omega)^2 / tau for a drive of angular amplitude omega.
  [[nodiscard]] OuSpec for_drive(double omega) const;
  void validate() const;
};

/// Static detuning mixture from the nitrogen hyperfine structure.
struct HyperfineEnsemble {
  std::vector<double> centers{-2.2, 0.0, 2.2};  ///< MHz
  std::vector<double> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double peak_width = 1.0;  ///< Gaussian standard deviation, MHz

  void validate() const;
};

/// Mixture draw in MHz. Always consumes one uniform and one normal draw.
[[nodiscard]] double sample_detuning(const HyperfineEnsemble& ensemble, CounterRng& rng);

}  // namespace cdd
