#pragma once

// Tracer-kinetic model and its inversion.
//
// Forward model: the arterial curve C_a enters a volume whose transit times
// have density h(t). The outlet curve is C_v = C_a (*) h, and the tissue
// curve is C_t = A * (C_a (*) r) with r = 1 - CDF(h) the residue function and
// A = CBF * rho. Only the product A is observable from (C_a, C_t): every
// "cbf" value below is CBF * rho, and turning it into a physiological CBF
// needs an externally supplied tissue density rho.
//
// Inversion: k = A * r is recovered by Fourier deconvolution, CBF * rho is
// max k (r(0) = 1), MTT = (1/A) int k dt, TTH = (2/A) int t k dt - MTT^2, and
// h = -(1/A) dk/dt by spectral differentiation of the even extension of k.

#include <array>
#include <optional>
#include <string>

#include "perfdecon/signals.hpp"
#include "perfdecon/spectral.hpp"

namespace perfdecon::perfusion {

using signals::GammaParams;
using signals::TimeGrid;
using signals::TimeSeries;
using spectral::ExtensionMode;
using spectral::FilterSpec;

/// |k(end)| must be below this fraction of max k before the moment
/// integrals over the finite grid are trusted.
inline constexpr double kDefaultTailTolerance = 1e-4;

/// Total-variation ratio above which a recovered k is flagged as unusable.
inline constexpr double kDefaultRoughnessThreshold = 2.0;

struct ForwardModelConfig {
  double cbf_rho = 1.0;
  GammaParams aif{3.0, 0.25};
  GammaParams impulse{10.0, 0.5};
  TimeGrid grid{0.0, 0.05, 801};

  void validate() const;
};

/// Noiseless synthetic curves; r is the analytic gamma survival function.
struct SyntheticCurves {
  TimeSeries c_a;
  TimeSeries h;
  TimeSeries r;
  TimeSeries k;
  TimeSeries c_ven;
  TimeSeries c_t;
};

SyntheticCurves synthesize(const ForwardModelConfig& config);

TimeSeries forward_cven(const TimeSeries& c_art, const TimeSeries& h);

/// cbf_rho * (c_art (*) r). cbf_rho = 0 yields the zero series.
TimeSeries forward_ct(const TimeSeries& c_art, const TimeSeries& r, double cbf_rho);

TimeSeries recover_k(const TimeSeries& c_a, const TimeSeries& c_t, double reg,
                     spectral::SpectralDiagnostics* diag = nullptr);

/// max over the time-domain samples of k.
double cbf_from_k(const TimeSeries& k);

double mtt_from_k(const TimeSeries& k, double cbf,
                  double tail_tolerance = kDefaultTailTolerance);

double tth_from_k(const TimeSeries& k, double cbf, double mtt,
                  double tail_tolerance = kDefaultTailTolerance);

/// h = -(1/cbf) dk/dt via spectral_derivative with the given extension.
TimeSeries recover_h(const TimeSeries& k, double cbf, const std::optional<FilterSpec>& filter,
                     ExtensionMode mode = ExtensionMode::EvenMirror,
                     spectral::SpectralDiagnostics* diag = nullptr);

/// Low-pass k, through the even extension when mode is EvenMirror (no
/// endpoint ringing) or directly on the periodic series otherwise.
TimeSeries smooth_residue(const TimeSeries& k, const FilterSpec& filter, ExtensionMode mode,
                          spectral::SpectralDiagnostics* diag = nullptr);

/// Gamma variate fit by log-linearization (Madsen form).
///
/// Around the peak the model ln h = ln A + slope * ln t - t / beta is linear
/// in (ln A, slope, 1/beta). It is solved by weighted least squares over the
/// contiguous run of samples above 10% of the peak, weights being the squared
/// fitted curve (refined over three passes, the first using h itself), which
/// turns log residuals back into absolute ones. The fitted curve peaks at
/// t_max = slope * beta, and the result is
///   K = slope + 1,   Q = t_max / slope.
/// Samples at t <= 0 or below 1e-12 * max(h) are excluded.
///
/// Throws NumericalError when the maximum sits on a grid boundary, the window
/// has fewer than three usable samples, or the fit is not a decaying peak.
GammaParams fit_gamma_variate(const TimeSeries& h);

/// Total variation of k divided by its range; 1 for a monotone curve.
double roughness(const TimeSeries& k);

struct PerfusionMetrics {
  double cbf;  // max k = CBF * rho
  double mtt;  // seconds
  double tth;  // seconds^2
  std::optional<std::array<double, 2>> raw_moments;  // orders 3 and 4 of h
};

struct DeconvConfig {
  double reg = 0.0;
  std::optional<FilterSpec> filter;
  ExtensionMode extension = ExtensionMode::EvenMirror;
  double tail_tolerance = kDefaultTailTolerance;
  double roughness_threshold = kDefaultRoughnessThreshold;
};

struct Diagnostics {
  double k_roughness = 0.0;
  double reconvolution_residual = 0.0;  // ||C_a (*) k - C_t|| / ||C_t||
  double imag_residue = 0.0;
  bool reconstruction_ok = false;
  double reg = 0.0;
  std::optional<double> cutoff_fraction;
  ExtensionMode extension = ExtensionMode::EvenMirror;
  std::string metrics_error;  // empty when metrics were computed
  std::string fit_error;      // empty when the gamma fit succeeded
};

struct RecoveredCurves {
  TimeSeries k_raw;  // deconvolution output
  TimeSeries k;      // k used for metrics (smoothed when a filter is set)
  TimeSeries r;      // k / cbf
  TimeSeries h;
  Diagnostics diagnostics;
};

struct Analysis {
  RecoveredCurves curves;
  double cbf;
  std::optional<PerfusionMetrics> metrics;
  std::optional<GammaParams> fit;
};

/// Full inversion of (C_a, C_t). Failures of the tail guard or of the gamma
/// fit are recorded in the diagnostics rather than thrown; an ill-posed
/// deconvolution or a non-positive k still throws.
Analysis analyze(const TimeSeries& c_a, const TimeSeries& c_t, const DeconvConfig& config);

}  // namespace perfdecon::perfusion
