#pragma once

#include <array>
#include <complex>

namespace cdd {

using complex = std::complex<double>;

/// Pure state of a two-level system, a0|0> + a1|1>.
/// |0> is the +1 eigenstate of sigma_z.
struct SpinState {
  complex a0{1.0, 0.0};
  complex a1{0.0, 0.0};

  [[nodiscard]] double norm_squared() const { return std::norm(a0) + std::norm(a1); }

  static SpinState ground() { return {}; }
  static SpinState excited() { return {{0.0, 0.0}, {1.0, 0.0}}; }
  /// (|0> + |1>)/sqrt(2), Bloch vector +x.
  static SpinState plus_x();
  /// (|0> + i|1>)/sqrt(2), Bloch vector +y.
  static SpinState plus_y();
};

/// H = h0*I + hx*sx + hy*sy + hz*sz with coefficients in rad/us.
struct PauliVector {
  double h0 = 0.0;
  double hx = 0.0;
  double hy = 0.0;
  double hz = 0.0;

  [[nodiscard]] bool is_finite() const;
  friend bool operator==(const PauliVector&, const PauliVector&) = default;
};

struct BlochVector {
  double nx = 0.0;
  double ny = 0.0;
  double nz = 0.0;

  [[nodiscard]] double distance(const BlochVector& other) const;
};

/// Exact propagator for a constant Hamiltonian over dt (us):
/// U = exp(-i h0 dt) [cos(|a| dt) I - i sin(|a| dt) (a/|a|).sigma].
/// Throws std::invalid_argument on non-finite input or dt <= 0.
[[nodiscard]] SpinState propagate_step(const SpinState& state, const PauliVector& h, double dt);

/// Effective constant Hamiltonian of the fourth-order Magnus expansion over a
/// step of length dt, given H sampled at the two Gauss-Legendre nodes
/// t + (1/2 -+ sqrt(3)/6) dt.
[[nodiscard]] PauliVector magnus4(const PauliVector& h_early, const PauliVector& h_late, double dt);

/// Applies exp(-i theta/2 * sigma_axis) for axis 0 (x), 1 (y) or 2 (z).
[[nodiscard]] SpinState rotate(const SpinState& state, int axis, double theta);

[[nodiscard]] BlochVector to_bloch(const SpinState& state);

/// |<a|b>|^2
[[nodiscard]] double fidelity(const SpinState& a, const SpinState& b);

}  // namespace cdd
