#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cdd/evolve.hpp"

namespace cdd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kNodeEarly = 0.5 - std::sqrt(3.0) / 6.0;
const double kNodeLate = 0.5 + std::sqrt(3.0) / 6.0;

template <class HamiltonianFn>
SpinState magnus_step(const SpinState& s, double t, double h, HamiltonianFn&& ham) {
  return propagate_step(s, magnus4(ham(t + kNodeEarly * h), ham(t + kNodeLate * h), h), h);
}

void note(FrameDeviation& dev, const SpinState& a, const SpinState& b) {
  const double d = to_bloch(a).distance(to_bloch(b));
  if (d > dev.max_bloch_distance) {
    dev.max_bloch_distance = d;
    dev.max_trace_distance = 0.5 * d;
  }
}

}  // namespace

FrameDeviation verify_rwa(const LabFrameParams& params, double window_us, double dt_lab_us) {
  params.validate();
  if (!(window_us > 0.0) || !std::isfinite(window_us)) throw std::invalid_argument("verify_rwa: window must be positive");
  if (!(dt_lab_us > 0.0) || dt_lab_us > 1.0 / (20.0 * params.carrier_mhz) * (1.0 + 1e-12)) {
    throw std::invalid_argument("verify_rwa: dt_lab must satisfy 0 < dt_lab <= 1/(20 omega0)");
  }
  const auto n = static_cast<std::size_t>(std::ceil(window_us / dt_lab_us));
  const double h = window_us / static_cast<double>(n);
  const double w0 = kTwoPi * params.carrier_mhz;

  auto lab = [&](double t) { return lab_frame_hamiltonian(params, t, 0.0, 0.0); };
  // RWA only: the exact I/Q modulation is kept, so phase modulation carries no small-angle error.
  auto rotating = [&](double t) { return iq_frame_hamiltonian(params.scheme, iq_sample(params.scheme, t), 0.0, 0.0, 0.0); };

  SpinState in_lab = SpinState::plus_y();
  SpinState in_frame = SpinState::plus_y();
  FrameDeviation dev;
  dev.steps = n;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    in_lab = magnus_step(in_lab, t, h, lab);
    in_frame = magnus_step(in_frame, t, h, rotating);
    // Back to the lab: psi = exp(-i w0 t sz / 2) psi_I.
    note(dev, in_lab, rotate(in_frame, 2, w0 * (t + h)));
  }
  return dev;
}

FrameDeviation verify_second_frame(const DriveScheme& scheme, double d_omega1, double horizon_us, double dt_us) {
  validate(scheme);
  if (!(horizon_us > 0.0) || !std::isfinite(horizon_us)) {
    throw std::invalid_argument("verify_second_frame: horizon must be positive");
  }
  const double w1 = kTwoPi * omega1_mhz(scheme);
  const double w2 = kTwoPi * omega2_mhz(scheme);
  if (dt_us <= 0.0) dt_us = 1.0 / (200.0 * omega1_mhz(scheme));
  const auto n = static_cast<std::size_t>(std::ceil(horizon_us / dt_us));
  const double h = horizon_us / static_cast<double>(n);

  auto first_frame = [&](double t) { return rotating_frame_hamiltonian(scheme, t, d_omega1, 0.0, 0.0); };
  const PauliVector second_frame{0.0, 0.5 * d_omega1, 0.0, -0.5 * w2};

  const SpinState init = SpinState::plus_y();
  SpinState state = init;
  FrameDeviation dev;
  dev.steps = n;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    state = magnus_step(state, t, h, first_frame);
    const double t_next = t + h;
    // psi_I2 = exp(+i Omega1 t sx / 2) psi_I
    note(dev, rotate(state, 0, -w1 * t_next), propagate_step(init, second_frame, t_next));
  }
  return dev;
}

}  // namespace cdd
