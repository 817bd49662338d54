#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdd/evolve.hpp"

namespace cdd {

enum class FitMethod {
  envelope_exp,   ///< exponential through the peaks of |F - asymptote| (oscillating curves)
  plain_exp,      ///< exponential through the curve itself
  gaussian_beat,  ///< exp(-(t/T)^2) times the static hyperfine beat (free-induction decay)
};

[[nodiscard]] const char* to_string(FitMethod method);

struct DecayFit {
  double T_decay = 0.0;    ///< us
  double T_stderr = 0.0;   ///< from the least-squares curvature, us
  double amplitude = 0.0;  ///< A in A exp(-t/T) + B
  double offset = 0.0;     ///< B
  double residual_rms = 0.0;
  double initial_T = 0.0;  ///< heuristic starting estimate (1/e crossing)
  std::size_t n_points = 0;
  FitMethod method = FitMethod::envelope_exp;
};

/// A fit that did not converge, hit the T bounds, or found no significant decay.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, double residual_rms, std::vector<double> residuals = {})
      : std::runtime_error(what), residual_rms_(residual_rms), residuals_(std::move(residuals)) {}

  [[nodiscard]] double residual_rms() const { return residual_rms_; }
  [[nodiscard]] const std::vector<double>& residuals() const { return residuals_; }

 private:
  double residual_rms_;
  std::vector<double> residuals_;
};

struct Envelope {
  std::vector<double> times;
  std::vector<double> values;
  double asymptote = 0.0;
};

/// Strict 3-point local maxima of |F - asymptote| (t = 0 included when it
/// exceeds its neighbour); asymptote = mean of the final 10% of samples.
[[nodiscard]] Envelope extract_envelope(const DecoherenceCurve& curve);

/// Least-squares A exp(-t/T) + B. Requires >= 10 curve points; T must land in
/// (0, 100 x span). Throws FitError otherwise or when A is not significant
/// against the residuals.
[[nodiscard]] DecayFit fit_decay(const DecoherenceCurve& curve, FitMethod method);

/// Free-induction fit of 2F - 1 = A exp(-(t/T)^2) sum_i w_i cos(2 pi c_i t).
/// T is the 1/e time of the envelope.
[[nodiscard]] DecayFit fit_fid_envelope(const DecoherenceCurve& curve, const HyperfineEnsemble& ensemble);

/// First time at which (F - baseline) / (F(0) - baseline) drops below `level`,
/// linearly interpolated. Throws FitError if it never does.
[[nodiscard]] double crossing_time(const DecoherenceCurve& curve, double level, double baseline);

/// C = (r1 - r2) / (r1 + r2). Throws std::invalid_argument if r1 + r2 <= 0.
[[nodiscard]] double contrast(double r1, double r2);

struct AlphaScanPoint {
  double alpha = 0.0;
  bool ok = false;
  DecayFit fit;
  std::string error;  ///< fit failure message when !ok
};

struct AlphaScanResult {
  InitAxis init_axis = InitAxis::y;
  std::vector<AlphaScanPoint> points;
  std::vector<DecoherenceCurve> curves;

  [[nodiscard]] std::vector<double> alphas() const;
  [[nodiscard]] std::vector<double> T_decay() const;  ///< NaN where the fit failed
};

/// Envelope fit for oscillating curves; plain fit for an x state under a
/// single drive, which is an eigenstate of the drive and does not precess.
[[nodiscard]] FitMethod default_fit_method(InitAxis axis, const DriveScheme& scheme);

/// One ensemble curve and fit per alpha. Every alpha reuses the base master
/// seed, so curves share noise draws. Fit failures are recorded per point.
/// alphas must be non-empty and strictly increasing.
[[nodiscard]] AlphaScanResult scan_alpha(const SimulationConfig& base, const std::vector<double>& alphas,
                                         InitAxis init_axis, const ExecutionOptions& exec = {});

/// `alpha,T_decay_us,stderr,fit_residual,status` rows; failed fits leave T empty.
void write_scan_csv(const AlphaScanResult& scan, std::ostream& out);

struct SchemeComparison {
  DecoherenceCurve phase;
  DecoherenceCurve amplitude;
  double max_abs_difference = 0.0;
  /// max |dF| / sqrt(se_phase^2 + se_amp^2) over points with nonzero error
  double max_pooled_z = 0.0;
};

/// Phase- and amplitude-modulated curves at equal alpha with identical seeds.
[[nodiscard]] SchemeComparison compare_schemes(const SimulationConfig& base, double alpha,
                                               const ExecutionOptions& exec = {});

}  // namespace cdd
