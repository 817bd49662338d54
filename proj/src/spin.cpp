#include "cdd/spin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdd {

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}

SpinState SpinState::plus_x() { return {{kInvSqrt2, 0.0}, {kInvSqrt2, 0.0}}; }
SpinState SpinState::plus_y() { return {{kInvSqrt2, 0.0}, {0.0, kInvSqrt2}}; }

bool PauliVector::is_finite() const {
  return std::isfinite(h0) && std::isfinite(hx) && std::isfinite(hy) && std::isfinite(hz);
}

double BlochVector::distance(const BlochVector& other) const {
  return std::hypot(nx - other.nx, ny - other.ny, nz - other.nz);
}

SpinState propagate_step(const SpinState& state, const PauliVector& h, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("propagate_step: dt must be positive and finite");
  }
  if (!h.is_finite()) {
    throw std::invalid_argument("propagate_step: non-finite Hamiltonian coefficient");
  }
  if (!std::isfinite(state.a0.real()) || !std::isfinite(state.a0.imag()) ||
      !std::isfinite(state.a1.real()) || !std::isfinite(state.a1.imag())) {
    throw std::invalid_argument("propagate_step: non-finite state amplitude");
  }

  const double len = std::sqrt(h.hx * h.hx + h.hy * h.hy + h.hz * h.hz);
  const double theta = len * dt;
  const double c = std::cos(theta);
  // sin(theta)/|a| stays well defined as |a| -> 0.
  const double s_over_len = len > 0.0 ? std::sin(theta) / len : dt;

  const complex minus_i{0.0, -1.0};
  const complex u00 = c + minus_i * s_over_len * h.hz;
  const complex u11 = c - minus_i * s_over_len * h.hz;
  const complex u01 = minus_i * s_over_len * complex{h.hx, -h.hy};
  const complex u10 = minus_i * s_over_len * complex{h.hx, h.hy};
  const complex global = std::polar(1.0, -h.h0 * dt);

  return {global * (u00 * state.a0 + u01 * state.a1), global * (u10 * state.a0 + u11 * state.a1)};
}

PauliVector magnus4(const PauliVector& h_early, const PauliVector& h_late, double dt) {
  // [a.s, b.s] = 2i (a x b).s, so the second Magnus term folds back into a Pauli vector.
  const double k = std::sqrt(3.0) * dt / 6.0;
  const double cx = h_late.hy * h_early.hz - h_late.hz * h_early.hy;
  const double cy = h_late.hz * h_early.hx - h_late.hx * h_early.hz;
  const double cz = h_late.hx * h_early.hy - h_late.hy * h_early.hx;
  return {0.5 * (h_early.h0 + h_late.h0), 0.5 * (h_early.hx + h_late.hx) + k * cx,
          0.5 * (h_early.hy + h_late.hy) + k * cy, 0.5 * (h_early.hz + h_late.hz) + k * cz};
}

SpinState rotate(const SpinState& state, int axis, double theta) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const complex i{0.0, 1.0};
  switch (axis) {
    case 0:
      return {c * state.a0 - i * s * state.a1, -i * s * state.a0 + c * state.a1};
    case 1:
      return {c * state.a0 - s * state.a1, s * state.a0 + c * state.a1};
    case 2:
      return {std::polar(1.0, -0.5 * theta) * state.a0, std::polar(1.0, 0.5 * theta) * state.a1};
    default:
      throw std::invalid_argument("rotate: axis must be 0, 1 or 2");
  }
}

BlochVector to_bloch(const SpinState& state) {
  const complex cross = std::conj(state.a0) * state.a1;
  return {2.0 * cross.real(), 2.0 * cross.imag(), std::norm(state.a0) - std::norm(state.a1)};
}

double fidelity(const SpinState& a, const SpinState& b) {
  return std::min(1.0, std::norm(std::conj(a.a0) * b.a0 + std::conj(a.a1) * b.a1));
}

}  // namespace cdd
