#include "cdd/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include <boost/math/tools/minima.hpp>

#include "cdd/format.hpp"

namespace cdd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMinPoints = 10;
constexpr double kMaxSpanFactor = 100.0;
/// A fitted T shorter than this many mean sample spacings is not resolved.
constexpr double kMinSpacings = 3.0;
/// Fitted amplitude must exceed this many residual RMS to count as a decay.
constexpr double kSignificance = 3.0;

struct Samples {
  std::vector<double> t;
  std::vector<double> y;
};

/// Model y = A * basis(t; T) [+ B]. For fixed T the linear parameters have a
/// closed form, leaving a one-dimensional search over log T.
class SeparableFit {
 public:
  using Basis = double (*)(double t, double T, const void* ctx);

  SeparableFit(const Samples& s, Basis basis, const void* ctx, bool with_offset)
      : s_(s), basis_(basis), ctx_(ctx), with_offset_(with_offset) {}

  struct Linear {
    double a = 0.0;
    double b = 0.0;
    double sse = std::numeric_limits<double>::infinity();
  };

  [[nodiscard]] Linear solve(double T) const {
    double sgg = 0.0, sg = 0.0, sgy = 0.0, sy = 0.0;
    const double n = static_cast<double>(s_.t.size());
    for (std::size_t i = 0; i < s_.t.size(); ++i) {
      const double g = basis_(s_.t[i], T, ctx_);
      sgg += g * g;
      sg += g;
      sgy += g * s_.y[i];
      sy += s_.y[i];
    }
    Linear lin;
    if (with_offset_) {
      const double det = sgg * n - sg * sg;
      if (!(std::abs(det) > 1e-300)) return lin;
      lin.a = (sgy * n - sg * sy) / det;
      lin.b = (sgg * sy - sg * sgy) / det;
    } else {
      if (!(sgg > 0.0)) return lin;
      lin.a = sgy / sgg;
    }
    lin.sse = 0.0;
    for (std::size_t i = 0; i < s_.t.size(); ++i) {
      const double r = s_.y[i] - lin.a * basis_(s_.t[i], T, ctx_) - lin.b;
      lin.sse += r * r;
    }
    return lin;
  }

  [[nodiscard]] std::vector<double> residuals(double T, const Linear& lin) const {
    std::vector<double> r(s_.t.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = s_.y[i] - lin.a * basis_(s_.t[i], T, ctx_) - lin.b;
    return r;
  }

  /// Standard error of T from sigma^2 (J^T J)^-1 with a numeric dT column.
  [[nodiscard]] double t_stderr(double T, const Linear& lin) const {
    const std::size_t p = with_offset_ ? 3 : 2;
    const std::size_t n = s_.t.size();
    if (n <= p) return std::numeric_limits<double>::quiet_NaN();
    const double h = 1e-6 * T;
    std::array<std::array<double, 3>, 3> jtj{};
    for (std::size_t i = 0; i < n; ++i) {
      const double g = basis_(s_.t[i], T, ctx_);
      const double dg = lin.a * (basis_(s_.t[i], T + h, ctx_) - basis_(s_.t[i], T - h, ctx_)) / (2.0 * h);
      const std::array<double, 3> row{g, dg, 1.0};
      for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) jtj[r][c] += row[r] * row[c];
    }
    const double sigma2 = lin.sse / static_cast<double>(n - p);
    double inv_tt;
    if (p == 2) {
      const double det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
      inv_tt = jtj[0][0] / det;
    } else {
      const auto& m = jtj;
      const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
      inv_tt = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    }
    return std::sqrt(std::max(0.0, sigma2 * inv_tt));
  }

 private:
  const Samples& s_;
  Basis basis_;
  const void* ctx_;
  bool with_offset_;
};

double exp_basis(double t, double T, const void*) { return std::exp(-t / T); }

struct BeatContext {
  std::vector<double> omegas;
  std::vector<double> weights;
};

double gaussian_beat_basis(double t, double T, const void* ctx) {
  const auto& beat = *static_cast<const BeatContext*>(ctx);
  double b = 0.0;
  for (std::size_t i = 0; i < beat.omegas.size(); ++i) b += beat.weights[i] * std::cos(beat.omegas[i] * t);
  const double x = t / T;
  return std::exp(-x * x) * b;
}

double first_crossing(const std::vector<double>& t, const std::vector<double>& y, double target) {
  for (std::size_t k = 1; k < y.size(); ++k) {
    if (y[k] < target) {
      const double frac = (y[k - 1] - target) / (y[k - 1] - y[k]);
      return t[k - 1] + frac * (t[k] - t[k - 1]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

DecayFit run_fit(const Samples& s, SeparableFit::Basis basis, const void* ctx, bool with_offset, FitMethod method,
                 double initial_T) {
  const double span = s.t.back() - s.t.front();
  if (!(span > 0.0)) throw FitError("fit: samples span zero time", 0.0);
  const SeparableFit fit(s, basis, ctx, with_offset);

  const double lo = std::log(span * 1e-3);
  const double hi = std::log(span * kMaxSpanFactor);
  constexpr int kGrid = 240;
  std::vector<double> grid_sse(kGrid + 1);
  int best = 0;
  for (int g = 0; g <= kGrid; ++g) {
    grid_sse[g] = fit.solve(std::exp(lo + (hi - lo) * g / kGrid)).sse;
    if (grid_sse[g] < grid_sse[best]) best = g;
  }
  if (!std::isfinite(grid_sse[best])) throw FitError("fit: degenerate design", 0.0);

  auto to_T = [&](int g) { return std::exp(lo + (hi - lo) * std::clamp(g, 0, kGrid) / kGrid); };
  const auto [log_T, sse] = boost::math::tools::brent_find_minima(
      [&](double x) { return fit.solve(std::exp(x)).sse; }, std::log(to_T(best - 1)), std::log(to_T(best + 1)),
      std::numeric_limits<double>::digits / 2);
  (void)sse;
  const double T = std::exp(log_T);
  const auto lin = fit.solve(T);
  const double rms = std::sqrt(lin.sse / static_cast<double>(s.t.size()));

  if (best == kGrid || T >= span * kMaxSpanFactor * 0.999) {
    throw FitError("fit: decay time exceeds " + format_double(kMaxSpanFactor) + "x the curve span", rms,
                   fit.residuals(T, lin));
  }
  if (best == 0 || T < kMinSpacings * span / static_cast<double>(s.t.size() - 1)) {
    throw FitError("fit: decay faster than the sampling resolves", rms, fit.residuals(T, lin));
  }
  if (!(lin.a > kSignificance * rms)) {
    throw FitError("fit: no significant decay (A = " + format_double(lin.a) + ", residual rms = " +
                       format_double(rms) + ")",
                   rms, fit.residuals(T, lin));
  }

  DecayFit out;
  out.T_decay = T;
  out.T_stderr = fit.t_stderr(T, lin);
  out.amplitude = lin.a;
  out.offset = lin.b;
  out.residual_rms = rms;
  out.initial_T = initial_T;
  out.n_points = s.t.size();
  out.method = method;
  return out;
}

double tail_mean(const std::vector<double>& y) {
  const std::size_t n = std::max<std::size_t>(1, y.size() / 10);
  return std::accumulate(y.end() - static_cast<std::ptrdiff_t>(n), y.end(), 0.0) / static_cast<double>(n);
}

void require_points(const DecoherenceCurve& curve) {
  if (curve.size() < kMinPoints || curve.fidelity.size() != curve.size()) {
    throw FitError("fit: need at least " + std::to_string(kMinPoints) + " curve points", 0.0);
  }
}

}  // namespace

const char* to_string(FitMethod method) {
  switch (method) {
    case FitMethod::envelope_exp:
      return "envelope_exp";
    case FitMethod::plain_exp:
      return "plain_exp";
    case FitMethod::gaussian_beat:
      break;
  }
  return "gaussian_beat";
}

Envelope extract_envelope(const DecoherenceCurve& curve) {
  Envelope env;
  env.asymptote = tail_mean(curve.fidelity);
  const auto& f = curve.fidelity;
  auto r = [&](std::size_t i) { return std::abs(f[i] - env.asymptote); };
  if (f.size() >= 2 && r(0) > r(1)) {
    env.times.push_back(curve.times[0]);
    env.values.push_back(r(0));
  }
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    if (r(i) > r(i - 1) && r(i) > r(i + 1)) {
      env.times.push_back(curve.times[i]);
      env.values.push_back(r(i));
    }
  }
  return env;
}

DecayFit fit_decay(const DecoherenceCurve& curve, FitMethod method) {
  require_points(curve);
  Samples s;
  if (method == FitMethod::envelope_exp) {
    Envelope env = extract_envelope(curve);
    if (env.times.size() < 3) throw FitError("fit: fewer than 3 envelope peaks", 0.0);
    s.t = std::move(env.times);
    s.y = std::move(env.values);
  } else if (method == FitMethod::plain_exp) {
    s.t = curve.times;
    s.y = curve.fidelity;
  } else {
    throw std::invalid_argument("fit_decay: gaussian_beat needs the hyperfine ensemble; use fit_fid_envelope");
  }
  // Start: 1/e crossing of (y - tail) relative to the first point.
  const double b0 = tail_mean(s.y);
  std::vector<double> rel(s.y.size());
  for (std::size_t i = 0; i < s.y.size(); ++i) rel[i] = (s.y[i] - b0) / (s.y[0] - b0);
  const double initial_T = first_crossing(s.t, rel, 1.0 / std::numbers::e) - s.t.front();
  return run_fit(s, exp_basis, nullptr, true, method, initial_T);
}

DecayFit fit_fid_envelope(const DecoherenceCurve& curve, const HyperfineEnsemble& ensemble) {
  require_points(curve);
  ensemble.validate();
  BeatContext beat;
  for (std::size_t i = 0; i < ensemble.centers.size(); ++i) {
    beat.omegas.push_back(kTwoPi * ensemble.centers[i]);
    beat.weights.push_back(ensemble.weights[i]);
  }
  Samples s;
  s.t = curve.times;
  s.y.resize(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) s.y[i] = 2.0 * curve.fidelity[i] - 1.0;
  const double initial_T = first_crossing(s.t, s.y, 1.0 / std::numbers::e);
  return run_fit(s, gaussian_beat_basis, &beat, false, FitMethod::gaussian_beat, initial_T);
}

double crossing_time(const DecoherenceCurve& curve, double level, double baseline) {
  if (curve.size() < 2) throw FitError("crossing_time: need at least two points", 0.0);
  const double scale = curve.fidelity[0] - baseline;
  if (scale == 0.0) throw FitError("crossing_time: first point equals the baseline", 0.0);
  std::vector<double> rel(curve.size());
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = (curve.fidelity[i] - baseline) / scale;
  const double t = first_crossing(curve.times, rel, level);
  if (std::isnan(t)) throw FitError("crossing_time: curve never crosses " + format_double(level), 0.0);
  return t;
}

double contrast(double r1, double r2) {
  if (!(r1 + r2 > 0.0)) throw std::invalid_argument("contrast: r1 + r2 must be positive");
  return (r1 - r2) / (r1 + r2);
}

std::vector<double> AlphaScanResult::alphas() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.alpha);
  return out;
}

std::vector<double> AlphaScanResult::T_decay() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.ok ? p.fit.T_decay : std::numeric_limits<double>::quiet_NaN());
  return out;
}

FitMethod default_fit_method(InitAxis axis, const DriveScheme& scheme) {
  // Only an x state under a single drive is stationary; everything else precesses.
  const bool oscillates = axis != InitAxis::x || modulation_strength(scheme) > 0.0;
  return oscillates ? FitMethod::envelope_exp : FitMethod::plain_exp;
}

AlphaScanResult scan_alpha(const SimulationConfig& base, const std::vector<double>& alphas, InitAxis init_axis,
                           const ExecutionOptions& exec) {
  if (alphas.empty()) throw std::invalid_argument("scan_alpha: alpha list is empty");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0)) throw std::invalid_argument("scan_alpha: alphas must be >= 0");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) {
      throw std::invalid_argument("scan_alpha: alphas must be strictly increasing");
    }
  }
  const DriveScheme kind = std::holds_alternative<SingleDrive>(base.scheme)
                               ? DriveScheme{PhaseMod{omega1_mhz(base.scheme), 0.0}}
                               : base.scheme;
  AlphaScanResult result;
  result.init_axis = init_axis;
  for (double alpha : alphas) {
    SimulationConfig cfg = base;
    cfg.scheme = with_alpha(kind, alpha);
    cfg.init_axis = init_axis;
    DecoherenceCurve curve = ensemble_curve(cfg, exec);
    AlphaScanPoint point;
    point.alpha = alpha;
    try {
      point.fit = fit_decay(curve, default_fit_method(init_axis, cfg.scheme));
      point.ok = true;
    } catch (const FitError& e) {
      point.error = e.what();
      point.fit.residual_rms = e.residual_rms();
    }
    result.points.push_back(std::move(point));
    result.curves.push_back(std::move(curve));
  }
  return result;
}

void write_scan_csv(const AlphaScanResult& scan, std::ostream& out) {
  out << "alpha,T_decay_us,stderr,fit_residual,status\n";
  for (const auto& p : scan.points) {
    out << format_double(p.alpha) << ',';
    if (p.ok) {
      out << format_double(p.fit.T_decay) << ',' << format_double(p.fit.T_stderr) << ',';
    } else {
      out << ",,";
    }
    out << format_double(p.fit.residual_rms) << ',' << (p.ok ? 0 : 1) << '\n';
  }
}

SchemeComparison compare_schemes(const SimulationConfig& base, double alpha, const ExecutionOptions& exec) {
  SimulationConfig phase_cfg = base;
  SimulationConfig amp_cfg = base;
  phase_cfg.scheme = PhaseMod{omega1_mhz(base.scheme), alpha};
  amp_cfg.scheme = AmpMod{omega1_mhz(base.scheme), alpha};

  SchemeComparison cmp;
  cmp.phase = ensemble_curve(phase_cfg, exec);
  cmp.amplitude = ensemble_curve(amp_cfg, exec);
  for (std::size_t i = 0; i < cmp.phase.size(); ++i) {
    const double diff = std::abs(cmp.phase.fidelity[i] - cmp.amplitude.fidelity[i]);
    cmp.max_abs_difference = std::max(cmp.max_abs_difference, diff);
    const double pooled = std::hypot(cmp.phase.std_error[i], cmp.amplitude.std_error[i]);
    if (pooled > 0.0) cmp.max_pooled_z = std::max(cmp.max_pooled_z, diff / pooled);
  }
  return cmp;
}

}  // namespace cdd
