#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "cdd/errors.hpp"
#include "cdd/evolve.hpp"
#include "oracles.hpp"

using namespace cdd;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SimulationConfig noiseless(const DriveScheme& scheme, InitAxis axis) {
  SimulationConfig c;
  c.scheme = scheme;
  c.init_axis = axis;
  c.bath.c = 0.0;
  c.amp_noise.relative_error = 0.0;
  c.hyperfine.weights = {0.0, 1.0, 0.0};
  c.hyperfine.peak_width = 0.0;
  c.duration = 1.0;
  c.n_realizations = 4;
  return c;
}

SimulationConfig undriven(double duration, double dt, std::size_t n) {
  SimulationConfig c;
  c.scheme = SingleDrive{9.0};
  c.init_axis = InitAxis::x;
  c.duration = duration;
  c.dt = dt;
  c.n_realizations = n;
  return c;
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Lab frame against a first-frame Hamiltonian with the given sy sign, +y start.
double lab_vs_frame(double ratio, double alpha, double sy_sign) {
  const DriveScheme scheme = AmpMod{9.0, alpha};
  const LabFrameParams params{ratio * 9.0, scheme};
  const double window = 1.0 / 9.0;
  const double h = 1.0 / (40.0 * params.carrier_mhz);
  const auto n = static_cast<std::size_t>(std::ceil(window / h));
  const double step = window / static_cast<double>(n);
  const double a = 0.5 - std::sqrt(3.0) / 6.0;
  const double b = 0.5 + std::sqrt(3.0) / 6.0;
  auto frame = [&](double t) {
    PauliVector p = rotating_frame_hamiltonian(scheme, t, 0.0, 0.0, 0.0);
    p.hy *= sy_sign;
    return p;
  };
  auto lab = [&](double t) { return lab_frame_hamiltonian(params, t, 0.0, 0.0); };
  SpinState s_lab = SpinState::plus_y();
  SpinState s_frame = SpinState::plus_y();
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * step;
    s_lab = propagate_step(s_lab, magnus4(lab(t + a * step), lab(t + b * step), step), step);
    s_frame = propagate_step(s_frame, magnus4(frame(t + a * step), frame(t + b * step), step), step);
    const SpinState back = rotate(s_frame, 2, kTwoPi * params.carrier_mhz * (t + step));
    worst = std::max(worst, to_bloch(s_lab).distance(to_bloch(back)));
  }
  return worst;
}

}  // namespace

TEST_CASE("noiseless single drive, init y: cos^2 Rabi oscillation at 9 MHz") {
  const SimulationConfig c = noiseless(SingleDrive{9.0}, InitAxis::y);
  const std::vector<SpinState> traj = simulate_trajectory(c, 0);
  REQUIRE(traj.size() == c.n_steps() + 1);
  const SpinState init = SpinState::plus_y();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = static_cast<double>(k) * c.dt;
    const double expected = std::pow(std::cos(0.5 * kTwoPi * 9.0 * t), 2);
    CHECK(fidelity(init, traj[k]) == doctest::Approx(expected).epsilon(1e-9));
  }
  // one full period returns to the start
  const auto period_steps = static_cast<std::size_t>(std::llround((1.0 / 9.0) / c.dt));
  CHECK(fidelity(init, traj[period_steps]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fidelity(init, traj[period_steps / 2]) < 1e-9);
}

TEST_CASE("noiseless single drive, init x stays locked") {
  const SimulationConfig c = noiseless(SingleDrive{9.0}, InitAxis::x);
  for (const SpinState& s : simulate_trajectory(c, 1)) {
    CHECK(fidelity(SpinState::plus_x(), s) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("trajectories are deterministic in seed and index") {
  SimulationConfig c;
  c.duration = 0.5;
  const auto a = simulate_trajectory(c, 3);
  const auto b = simulate_trajectory(c, 3);
  const auto d = simulate_trajectory(c, 4);
  REQUIRE(a.size() == b.size());
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].a0 == b[k].a0);
    CHECK(a[k].a1 == b[k].a1);
    differs = differs || a[k].a0 != d[k].a0;
  }
  CHECK(differs);
  CHECK_THROWS_AS((void)simulate_trajectory(c, c.n_realizations), std::invalid_argument);
}

TEST_CASE("noiseless ensemble oscillates undamped between 0 and 1") {
  SimulationConfig c = noiseless(SingleDrive{9.0}, InitAxis::y);
  c.duration = 5.0;
  const DecoherenceCurve curve = ensemble_curve(c, {1});
  const auto [lo, hi] = std::minmax_element(curve.fidelity.begin(), curve.fidelity.end());
  CHECK(*lo < 1e-3);
  CHECK(*hi == doctest::Approx(1.0));
  const std::size_t tail = curve.size() - 200;
  CHECK(*std::min_element(curve.fidelity.begin() + tail, curve.fidelity.end()) < 1e-3);
  CHECK(*std::max_element(curve.fidelity.begin() + tail, curve.fidelity.end()) > 0.999);
  CHECK(max_abs(curve.std_error) < 1e-12);
  CHECK(curve.n_realizations == 4);
}

TEST_CASE("ensemble curve is independent of the worker count") {
  SimulationConfig c;
  c.duration = 1.0;
  c.n_realizations = 100;
  const DecoherenceCurve one = ensemble_curve(c, {1});
  for (unsigned w : {2u, 3u, 8u}) {
    const DecoherenceCurve many = ensemble_curve(c, {w});
    CHECK(many.fidelity == one.fidelity);
    CHECK(many.std_error == one.std_error);
    CHECK(many.times == one.times);
  }
}

TEST_CASE("fidelities stay in [0, 1] and start at 1") {
  SimulationConfig c;
  c.duration = 2.0;
  c.n_realizations = 50;
  const DecoherenceCurve curve = ensemble_curve(c);
  CHECK(curve.fidelity[0] == doctest::Approx(1.0));
  for (double f : curve.fidelity) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("standard error scales as 1/sqrt(n)") {
  SimulationConfig c;
  c.duration = 2.0;
  c.record_stride = 9;
  c.n_realizations = 100;
  const DecoherenceCurve small = ensemble_curve(c);
  c.n_realizations = 400;
  const DecoherenceCurve big = ensemble_curve(c);
  double ratio_sum = 0.0;
  int count = 0;
  for (std::size_t r = 10; r < small.size(); ++r) {
    ratio_sum += small.std_error[r] / big.std_error[r];
    ++count;
  }
  CHECK(ratio_sum / count == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("halving dt leaves the ensemble curve within Monte Carlo error") {
  SimulationConfig c;
  c.duration = 3.0;
  c.n_realizations = 200;
  c.dt = 1.0 / 360.0;
  c.record_stride = 4;
  const DecoherenceCurve coarse = ensemble_curve(c);
  c.dt = 1.0 / 720.0;
  c.record_stride = 8;
  const DecoherenceCurve fine = ensemble_curve(c);
  REQUIRE(coarse.size() == fine.size());
  int outside = 0;
  for (std::size_t r = 0; r < coarse.size(); ++r) {
    CHECK(coarse.times[r] == doctest::Approx(fine.times[r]));
    if (std::abs(coarse.fidelity[r] - fine.fidelity[r]) > std::max(coarse.std_error[r], 1e-6)) ++outside;
  }
  CHECK(outside == 0);
}

TEST_CASE("spin-locked x outlives the Rabi-like y decay under a single drive") {
  SimulationConfig c;
  c.scheme = SingleDrive{9.0};
  c.duration = 3.0;
  c.n_realizations = 200;
  c.record_stride = 4;
  c.init_axis = InitAxis::x;
  const DecoherenceCurve x = ensemble_curve(c);
  c.init_axis = InitAxis::y;
  const DecoherenceCurve y = ensemble_curve(c);
  // mean over the last microsecond: x stays close to locked, y has relaxed toward 1/2
  auto tail_mean = [](const DecoherenceCurve& curve) {
    double s = 0.0;
    int n = 0;
    for (std::size_t r = 0; r < curve.size(); ++r) {
      if (curve.times[r] >= 2.0) {
        s += curve.fidelity[r];
        ++n;
      }
    }
    return s / n;
  };
  CHECK(tail_mean(x) > 0.9);
  CHECK(std::abs(tail_mean(y) - 0.5) < 0.1);
}

TEST_CASE("detuned hyperfine peaks keep a residual oscillation at late times") {
  // A spin off resonance by 2.2 MHz nutates about a tilted axis with a
  // slightly faster, weakly dispersed frequency; the resonant peak alone
  // dephases more slowly but its late-time envelope is compared here at a
  // time where the two contributions separate.
  SimulationConfig c;
  c.scheme = SingleDrive{9.0};
  c.init_axis = InitAxis::x;
  c.duration = 4.0;
  c.n_realizations = 400;
  c.record_stride = 8;
  const DecoherenceCurve triplet = ensemble_curve(c);
  c.hyperfine.weights = {0.0, 1.0, 0.0};
  const DecoherenceCurve resonant = ensemble_curve(c);
  auto tail_mean = [](const DecoherenceCurve& curve) {
    double s = 0.0;
    int n = 0;
    for (std::size_t r = 0; r < curve.size(); ++r) {
      if (curve.times[r] >= 3.0) {
        s += curve.fidelity[r];
        ++n;
      }
    }
    return s / n;
  };
  // the side peaks are tilted away from x and lose part of the locked projection
  CHECK(tail_mean(triplet) < tail_mean(resonant));
  CHECK(tail_mean(triplet) > 0.5);
}

TEST_CASE("configuration validation") {
  SimulationConfig c;
  CHECK_NOTHROW(c.validate());
  c.dt = 1.0 / 100.0;
  try {
    c.validate();
    FAIL("coarse dt accepted");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "run.dt_us");
    CHECK(std::string(e.what()).find("dt") != std::string::npos);
  }
  c = SimulationConfig{};
  c.n_realizations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimulationConfig{};
  c.phase_jitter_rad = 0.01;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.drive_model = DriveModel::iq;
  CHECK_NOTHROW(c.validate());
  c = SimulationConfig{};
  c.record_stride = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimulationConfig{};
  c.duration = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimulationConfig{};
  c.hyperfine.weights = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimulationConfig{};
  c.init_axis = InitAxis::z;
  CHECK_THROWS_AS(c.validate_undriven(), ConfigError);
  // undriven runs accept a dt coarser than the drive would allow
  c = undriven(1.0, 0.05, 10);
  CHECK_NOTHROW(c.validate_undriven());
}

TEST_CASE("init axis parsing") {
  CHECK(parse_init_axis("x") == InitAxis::x);
  CHECK(parse_init_axis("z") == InitAxis::z);
  CHECK(std::string(to_string(InitAxis::y)) == "y");
  CHECK_THROWS_AS((void)parse_init_axis("w"), std::invalid_argument);
  CHECK(to_bloch(initial_state(InitAxis::z)).nz == doctest::Approx(1.0));
}

TEST_CASE("config hash tracks every field") {
  SimulationConfig a;
  SimulationConfig b;
  CHECK(a.hash() == b.hash());
  b.master_seed = 2;
  CHECK(a.hash() != b.hash());
  b = a;
  b.hyperfine.peak_width = 0.5;
  CHECK(a.hash() != b.hash());
  b = a;
  b.drive_model = DriveModel::iq;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("curve CSV format") {
  SimulationConfig c;
  c.duration = 0.01;
  c.n_realizations = 3;
  const DecoherenceCurve curve = ensemble_curve(c);
  std::ostringstream out;
  write_curve_csv(curve, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "time_us,fidelity,stderr");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) == curve.fidelity[rows]);
    ++rows;
  }
  CHECK(rows == c.n_records());
  CHECK(rows == static_cast<std::size_t>(std::llround(0.01 / c.dt)) + 1);
}

TEST_CASE("free induction without noise stays at 1") {
  SimulationConfig c = undriven(2.0, 0.001, 20);
  c.bath.c = 0.0;
  c.hyperfine.weights = {0.0, 1.0, 0.0};
  c.hyperfine.peak_width = 0.0;
  const DecoherenceCurve curve = fid_curve(c);
  for (double f : curve.fidelity) CHECK(f == 1.0);
}

TEST_CASE("free induction shows the hyperfine beat") {
  // Without the bath, F = (1 + sum_i w_i cos(2 pi c_i t) exp(-(2 pi s t)^2 / 2)) / 2.
  SimulationConfig c = undriven(1.5, 0.002, 20000);
  c.bath.c = 0.0;
  const DecoherenceCurve curve = fid_curve(c);
  const double s = c.hyperfine.peak_width;
  for (std::size_t r = 0; r < curve.size(); ++r) {
    const double t = curve.times[r];
    double beat = 0.0;
    for (std::size_t i = 0; i < 3; ++i) beat += c.hyperfine.weights[i] * std::cos(kTwoPi * c.hyperfine.centers[i] * t);
    const double ref = 0.5 * (1.0 + beat * std::exp(-0.5 * std::pow(kTwoPi * s * t, 2)));
    CHECK(std::abs(curve.fidelity[r] - ref) < 5.0 * curve.std_error[r] + 1e-9);
  }
}

TEST_CASE("Hahn echo without bath noise refocuses perfectly") {
  SimulationConfig c = undriven(50.0, 0.01, 50);
  c.bath.c = 0.0;
  const DecoherenceCurve curve = hahn_echo_curve(c);
  for (double f : curve.fidelity) CHECK(f == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Hahn echo follows the closed-form OU decay") {
  SimulationConfig c = undriven(800.0, 0.05, 400);
  c.record_stride = 40;
  const DecoherenceCurve curve = hahn_echo_curve(c);
  const OuSpec bath = c.bath.internal();
  REQUIRE(curve.times.back() == doctest::Approx(800.0));
  for (std::size_t r = 0; r < curve.size(); ++r) {
    const double ref = oracle::echo_fidelity(curve.times[r], bath.c, bath.tau);
    CHECK(std::abs(curve.fidelity[r] - ref) < 4.0 * curve.std_error[r] + 0.01);
  }
}

TEST_CASE("doubling the bath diffusion roughly halves the echo time") {
  const double tau = 10.0;
  const double c = 6.6667e-5;
  const double ratio = oracle::echo_1e_time(2.0 * c, tau) / oracle::echo_1e_time(c, tau);
  CHECK(ratio > 0.5);
  CHECK(ratio < 0.6);
}

TEST_CASE("lab-frame deviation shrinks with the carrier ratio") {
  std::vector<double> inv;
  std::vector<double> dev;
  for (double ratio : {50.0, 100.0, 200.0, 400.0}) {
    const LabFrameParams p{ratio * 9.0, SingleDrive{9.0}};
    const FrameDeviation d = verify_rwa(p, 1.0 / 9.0, 1.0 / (40.0 * p.carrier_mhz));
    if (!dev.empty()) CHECK(d.max_bloch_distance < dev.back());
    if (ratio == 100.0) CHECK(d.max_bloch_distance < 0.03);
    CHECK(d.max_trace_distance == doctest::Approx(0.5 * d.max_bloch_distance));
    inv.push_back(1.0 / ratio);
    dev.push_back(d.max_bloch_distance);
  }
  const auto [intercept, slope] = oracle::linear_fit(inv, dev);
  CHECK(slope > 0.0);
  CHECK(std::abs(intercept) < 0.05 * dev.front());
}

TEST_CASE("lab-frame check with modulation also converges") {
  std::vector<double> dev;
  for (double ratio : {50.0, 100.0, 200.0}) {
    const LabFrameParams p{ratio * 9.0, PhaseMod{9.0, 0.1}};
    dev.push_back(verify_rwa(p, 1.0 / 9.0, 1.0 / (40.0 * p.carrier_mhz)).max_bloch_distance);
  }
  CHECK(dev[1] < dev[0]);
  CHECK(dev[2] < dev[1]);
  CHECK(dev[2] < 0.6 * dev[0]);
}

TEST_CASE("the rotating-wave sy term carries +Q") {
  // With the sign flipped the frames disagree at O(alpha) however large the carrier.
  const double alpha = 0.2;
  const double good_lo = lab_vs_frame(400.0, alpha, +1.0);
  const double good_hi = lab_vs_frame(100.0, alpha, +1.0);
  const double bad = lab_vs_frame(400.0, alpha, -1.0);
  CHECK(good_lo < 0.5 * good_hi);
  CHECK(bad > 10.0 * good_lo);
  CHECK(bad > 0.5 * alpha);
}

TEST_CASE("verify_rwa argument checks") {
  const LabFrameParams p{900.0, SingleDrive{9.0}};
  CHECK_THROWS_AS((void)verify_rwa(p, 0.0, 1e-5), std::invalid_argument);
  CHECK_THROWS_AS((void)verify_rwa(p, 0.1, 1.0 / (10.0 * 900.0)), std::invalid_argument);
  CHECK_THROWS_AS((void)verify_rwa({0.0, SingleDrive{9.0}}, 0.1, 1e-5), std::invalid_argument);
}

TEST_CASE("second frame: no second drive and no offset is exact") {
  const FrameDeviation d = verify_second_frame(PhaseMod{9.0, 0.0}, 0.0, 10.0 / 9.0);
  CHECK(d.max_bloch_distance < 1e-8);
}

TEST_CASE("second frame: deviation of order alpha and monotone up to 0.3") {
  const double w1 = kTwoPi * 9.0;
  std::vector<double> dev;
  for (double alpha : {0.05, 0.1, 0.2, 0.3}) {
    const double d = verify_second_frame(PhaseMod{9.0, alpha}, 0.0075 * w1, 10.0 / 9.0).max_bloch_distance;
    // counter-rotating ripple of relative size alpha/2 plus an alpha^2/4 shift
    CHECK(d < 2.0 * (alpha / 2.0 + alpha * alpha / 4.0));
    CHECK(d > 0.25 * alpha);
    if (!dev.empty()) CHECK(d > dev.back());
    dev.push_back(d);
  }
  // halving alpha reduces the deviation
  CHECK(dev[0] < dev[1]);
}

TEST_CASE("second frame: a constant amplitude offset is captured by the sx term") {
  // with alpha = 0 the second-frame model is exact for any constant offset
  const FrameDeviation d = verify_second_frame(PhaseMod{9.0, 0.0}, 0.05 * kTwoPi * 9.0, 20.0 / 9.0);
  CHECK(d.max_bloch_distance < 1e-8);
}

TEST_CASE("I/Q drive model converges to the canonical model for small alpha") {
  SimulationConfig c = noiseless(PhaseMod{9.0, 0.02}, InitAxis::y);
  c.duration = 2.0;
  const auto canonical = simulate_trajectory(c, 0);
  c.drive_model = DriveModel::iq;
  const auto iq = simulate_trajectory(c, 0);
  double worst = 0.0;
  for (std::size_t k = 0; k < iq.size(); ++k) worst = std::max(worst, to_bloch(iq[k]).distance(to_bloch(canonical[k])));
  // the small-angle expansion is accurate to alpha^2
  CHECK(worst < 0.02);
  c.scheme = AmpMod{9.0, 0.02};
  const auto amp_iq = simulate_trajectory(c, 0);
  c.drive_model = DriveModel::canonical;
  const auto amp_canonical = simulate_trajectory(c, 0);
  for (std::size_t k = 0; k < amp_iq.size(); k += 50) {
    CHECK(std::abs(amp_iq[k].a0 - amp_canonical[k].a0) < 1e-12);
  }
}

TEST_CASE("zero-order hold and phase jitter are reproducible and perturb the curve") {
  SimulationConfig c;
  c.drive_model = DriveModel::iq;
  c.duration = 1.0;
  c.n_realizations = 20;
  const DecoherenceCurve base = ensemble_curve(c);
  c.awg_sampling = AwgSampling::zero_order_hold;
  const DecoherenceCurve held = ensemble_curve(c);
  c.phase_jitter_rad = 0.05;
  const DecoherenceCurve jittered = ensemble_curve(c);
  CHECK(held.fidelity != base.fidelity);
  CHECK(jittered.fidelity != held.fidelity);
  CHECK(ensemble_curve(c).fidelity == jittered.fidelity);
}
