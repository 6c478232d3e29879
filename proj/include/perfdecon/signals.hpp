#pragma once

// Sampled signals on a uniform time grid and the time-domain operations on
// them: gamma variate synthesis, residue construction, trapezoidal calculus,
// finite differences and noise injection.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace perfdecon::signals {

/// Uniform sampling t_j = t0 + j*dt for j = 0..n-1 (seconds).
class TimeGrid {
 public:
  TimeGrid(double t0, double dt, std::size_t n);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return n_; }
  double time(std::size_t j) const { return t0_ + static_cast<double>(j) * dt_; }
  double back() const { return time(n_ - 1); }
  std::vector<double> times() const;

  /// Same origin, spacing and count, with a relative tolerance on t0/dt.
  bool matches(const TimeGrid& other) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t0_;
  double dt_;
  std::size_t n_;
};

/// Real samples on a TimeGrid. All values are finite.
class TimeSeries {
 public:
  TimeSeries(TimeGrid grid, std::vector<double> values);

  /// n zeros on `grid`.
  explicit TimeSeries(TimeGrid grid);

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }

  double max() const;
  double min() const;
  double max_abs() const;

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

/// Gamma variate t^(K-1) exp(-t/Q) / (Gamma(K) Q^K). shape_k = K > 0
/// (dimensionless), scale_q = Q > 0 (seconds).
struct GammaParams {
  double shape_k;
  double scale_q;

  GammaParams(double shape, double scale);

  double mean() const { return shape_k * scale_q; }
  double variance() const { return shape_k * scale_q * scale_q; }
  double mode() const { return (shape_k - 1.0) * scale_q; }
};

/// Additive Gaussian noise with standard deviation sigma * max|signal|.
struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

TimeSeries gamma_pdf(const GammaParams& params, const TimeGrid& grid);

/// Analytic survival function 1 - CDF of the gamma variate, i.e. the
/// regularized upper incomplete gamma Q(K, t/Q).
TimeSeries gamma_survival(const GammaParams& params, const TimeGrid& grid);

/// (h - min h) / (max h - min h). Throws NumericalError on a constant input.
TimeSeries normalize_unit_peak(const TimeSeries& ts);

/// Trapezoidal running integral from t0; output[0] = 0.
TimeSeries cumulative_integral(const TimeSeries& ts);

/// Trapezoidal integral over the whole grid.
double integrate(const TimeSeries& ts);

/// r = 1 - cumulative_integral(h), clamped at 0. Rejects h < -1e-12.
TimeSeries residue_from_pdf(const TimeSeries& h);

TimeSeries scale_by(const TimeSeries& ts, double a);

/// Second-order finite differences: central inside, one-sided at both ends.
TimeSeries finite_diff_derivative(const TimeSeries& ts);

/// Trapezoidal integral of t^order * ts(t).
double raw_moment(const TimeSeries& ts, int order);

TimeSeries add_noise(const TimeSeries& ts, const NoiseSpec& spec);

/// ||x - ref||_2 / ||ref||_2 (absolute norm when ref is zero). Lengths must match.
double relative_l2_error(std::span<const double> x, std::span<const double> ref);

}  // namespace perfdecon::signals
