#include "perfdecon/perfusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "perfdecon/error.hpp"

namespace perfdecon::perfusion {

namespace {

constexpr double kFitWindowFraction = 0.1;
constexpr double kFitFloorFraction = 1e-12;
constexpr int kFitPasses = 3;

void check_tail(const TimeSeries& k, double tail_tolerance, const char* what) {
  const double peak = k.max();
  const double tail = std::abs(k[k.size() - 1]);
  if (tail > tail_tolerance * peak) {
    throw NumericalError(std::string(what) + ": k has not decayed at the end of the grid (|k(end)| = " +
                         std::to_string(tail / peak) + " of max, limit " +
                         std::to_string(tail_tolerance) + "); use a longer grid");
  }
}

void check_cbf(double cbf, const char* what) {
  if (!(cbf > 0.0) || !std::isfinite(cbf)) {
    throw InvalidArgument(std::string(what) + ": cbf must be > 0");
  }
}

// Solves the 3x3 system m x = b by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> b) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    }
    if (m[pivot][col] == 0.0) throw NumericalError("fit_gamma_variate: singular normal equations");
    std::swap(m[col], m[pivot]);
    std::swap(b[col], b[pivot]);
    for (int row = col + 1; row < 3; ++row) {
      const double f = m[row][col] / m[col][col];
      for (int c = col; c < 3; ++c) m[row][c] -= f * m[col][c];
      b[row] -= f * b[col];
    }
  }
  std::array<double, 3> x{};
  for (int row = 2; row >= 0; --row) {
    double s = b[row];
    for (int c = row + 1; c < 3; ++c) s -= m[row][c] * x[c];
    x[row] = s / m[row][row];
  }
  return x;
}

}  // namespace

void ForwardModelConfig::validate() const {
  if (!(cbf_rho > 0.0) || !std::isfinite(cbf_rho)) {
    throw InvalidArgument("ForwardModelConfig: cbf_rho must be > 0");
  }
  // Re-run the parameter checks in case fields were assigned directly.
  [[maybe_unused]] const GammaParams a(aif.shape_k, aif.scale_q);
  [[maybe_unused]] const GammaParams h(impulse.shape_k, impulse.scale_q);
}

SyntheticCurves synthesize(const ForwardModelConfig& config) {
  config.validate();
  TimeSeries c_a = signals::gamma_pdf(config.aif, config.grid);
  TimeSeries h = signals::gamma_pdf(config.impulse, config.grid);
  TimeSeries r = signals::gamma_survival(config.impulse, config.grid);
  TimeSeries k = signals::scale_by(r, config.cbf_rho);
  TimeSeries c_ven = forward_cven(c_a, h);
  TimeSeries c_t = forward_ct(c_a, r, config.cbf_rho);
  return {std::move(c_a), std::move(h), std::move(r), std::move(k), std::move(c_ven),
          std::move(c_t)};
}

TimeSeries forward_cven(const TimeSeries& c_art, const TimeSeries& h) {
  return spectral::convolve_fft(c_art, h);
}

TimeSeries forward_ct(const TimeSeries& c_art, const TimeSeries& r, double cbf_rho) {
  if (!(cbf_rho >= 0.0) || !std::isfinite(cbf_rho)) {
    throw InvalidArgument("forward_ct: cbf_rho must be >= 0");
  }
  return signals::scale_by(spectral::convolve_fft(c_art, r), cbf_rho);
}

TimeSeries recover_k(const TimeSeries& c_a, const TimeSeries& c_t, double reg,
                     spectral::SpectralDiagnostics* diag) {
  return spectral::deconvolve_fft(c_t, c_a, reg, diag);
}

double cbf_from_k(const TimeSeries& k) {
  const double peak = k.max();
  if (!(peak > 0.0)) throw NumericalError("cbf_from_k: recovered k has no positive maximum");
  return peak;
}

double mtt_from_k(const TimeSeries& k, double cbf, double tail_tolerance) {
  check_cbf(cbf, "mtt_from_k");
  check_tail(k, tail_tolerance, "mtt_from_k");
  return signals::integrate(k) / cbf;
}

double tth_from_k(const TimeSeries& k, double cbf, double mtt, double tail_tolerance) {
  check_cbf(cbf, "tth_from_k");
  check_tail(k, tail_tolerance, "tth_from_k");
  const double tth = 2.0 / cbf * signals::raw_moment(k, 1) - mtt * mtt;
  if (tth < -1e-6 * mtt * mtt) {
    throw NumericalError("tth_from_k: negative transit-time variance " + std::to_string(tth) +
                         "; k and mtt are inconsistent");
  }
  return std::max(tth, 0.0);
}

TimeSeries recover_h(const TimeSeries& k, double cbf, const std::optional<FilterSpec>& filter,
                     ExtensionMode mode, spectral::SpectralDiagnostics* diag) {
  check_cbf(cbf, "recover_h");
  const TimeSeries dk = spectral::spectral_derivative(k, mode, filter, diag);
  return signals::scale_by(dk, -1.0 / cbf);
}

TimeSeries smooth_residue(const TimeSeries& k, const FilterSpec& filter, ExtensionMode mode,
                          spectral::SpectralDiagnostics* diag) {
  if (mode == ExtensionMode::None) return spectral::low_pass_filter(k, filter, diag);
  const TimeSeries ext = spectral::low_pass_filter(spectral::even_extension(k), filter, diag);
  return spectral::restrict_extension(ext, k.size());
}

GammaParams fit_gamma_variate(const TimeSeries& h) {
  const std::size_t n = h.size();
  const auto values = h.values();
  const std::size_t peak = static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
  const double h_max = h[peak];
  if (!(h_max > 0.0)) throw NumericalError("fit_gamma_variate: no positive maximum");
  if (peak == 0 || peak == n - 1) {
    throw NumericalError("fit_gamma_variate: maximum lies on the grid boundary");
  }

  const double window_floor = kFitWindowFraction * h_max;
  std::size_t lo = peak;
  while (lo > 0 && h[lo - 1] > window_floor) --lo;
  std::size_t hi = peak;
  while (hi + 1 < n && h[hi + 1] > window_floor) ++hi;

  std::vector<double> t;
  std::vector<double> y;
  std::vector<double> w;
  for (std::size_t j = lo; j <= hi; ++j) {
    const double tj = h.grid().time(j);
    if (tj <= 0.0 || h[j] <= kFitFloorFraction * h_max) continue;
    t.push_back(tj);
    y.push_back(std::log(h[j]));
    w.push_back(h[j] * h[j]);
  }
  if (t.size() < 3) throw NumericalError("fit_gamma_variate: fewer than 3 samples around the peak");

  // Columns of the design matrix: 1, ln t, -t.
  std::array<double, 3> coef{};
  for (int pass = 0; pass < kFitPasses; ++pass) {
    std::array<std::array<double, 3>, 3> normal{};
    std::array<double, 3> rhs{};
    for (std::size_t j = 0; j < t.size(); ++j) {
      const std::array<double, 3> row{1.0, std::log(t[j]), -t[j]};
      for (int a = 0; a < 3; ++a) {
        rhs[a] += w[j] * row[a] * y[j];
        for (int b = 0; b < 3; ++b) normal[a][b] += w[j] * row[a] * row[b];
      }
    }
    coef = solve3(normal, rhs);
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double fitted = std::exp(coef[0] + coef[1] * std::log(t[j]) - coef[2] * t[j]);
      w[j] = fitted * fitted;
    }
  }

  const double slope = coef[1];
  const double inv_beta = coef[2];
  if (!(slope > 0.0) || !(inv_beta > 0.0) || !std::isfinite(slope) || !std::isfinite(inv_beta)) {
    throw NumericalError("fit_gamma_variate: log-linear fit does not describe a decaying peak");
  }
  const double t_max = slope / inv_beta;
  return GammaParams(slope + 1.0, t_max / slope);
}

double roughness(const TimeSeries& k) {
  double total = 0.0;
  for (std::size_t j = 1; j < k.size(); ++j) total += std::abs(k[j] - k[j - 1]);
  const double range = k.max() - k.min();
  if (range == 0.0) return total == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return total / range;
}

Analysis analyze(const TimeSeries& c_a, const TimeSeries& c_t, const DeconvConfig& config) {
  spectral::SpectralDiagnostics spectral_diag;
  TimeSeries k_raw = recover_k(c_a, c_t, config.reg, &spectral_diag);
  TimeSeries k = config.filter
                     ? smooth_residue(k_raw, *config.filter, config.extension, &spectral_diag)
                     : k_raw;

  const double cbf = cbf_from_k(k);
  TimeSeries h = recover_h(k_raw, cbf, config.filter, config.extension, &spectral_diag);
  TimeSeries r = signals::scale_by(k, 1.0 / cbf);

  Diagnostics diag;
  diag.k_roughness = roughness(k);
  diag.reconstruction_ok = diag.k_roughness <= config.roughness_threshold;
  diag.reconvolution_residual =
      signals::relative_l2_error(spectral::convolve_fft(c_a, k).values(), c_t.values());
  diag.reg = config.reg;
  if (config.filter) diag.cutoff_fraction = config.filter->cutoff_fraction;
  diag.extension = config.extension;

  std::optional<PerfusionMetrics> metrics;
  try {
    const double mtt = mtt_from_k(k, cbf, config.tail_tolerance);
    const double tth = tth_from_k(k, cbf, mtt, config.tail_tolerance);
    metrics = PerfusionMetrics{cbf, mtt, tth,
                               std::array<double, 2>{signals::raw_moment(h, 3),
                                                     signals::raw_moment(h, 4)}};
  } catch (const NumericalError& e) {
    diag.metrics_error = e.what();
  }

  std::optional<GammaParams> fit;
  try {
    fit = fit_gamma_variate(h);
  } catch (const Error& e) {
    diag.fit_error = e.what();
  }
  diag.imag_residue = spectral_diag.max_imag_residue;

  return Analysis{RecoveredCurves{std::move(k_raw), std::move(k), std::move(r), std::move(h), diag},
                  cbf, metrics, fit};
}

}  // namespace perfdecon::perfusion
