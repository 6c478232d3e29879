#include "perfdecon/signals.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "perfdecon/error.hpp"

namespace perfdecon::signals {

namespace {

constexpr double kNegativePdfTolerance = 1e-12;

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TimeGrid::TimeGrid(double t0, double dt, std::size_t n) : t0_(t0), dt_(dt), n_(n) {
  if (!std::isfinite(t0)) throw InvalidArgument("TimeGrid: t0 must be finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("TimeGrid: dt must be positive");
  if (n < 2) throw InvalidArgument("TimeGrid: need at least 2 samples");
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(n_);
  for (std::size_t j = 0; j < n_; ++j) t[j] = time(j);
  return t;
}

bool TimeGrid::matches(const TimeGrid& other) const {
  return n_ == other.n_ && close_rel(dt_, other.dt_, 1e-12) &&
         std::abs(t0_ - other.t0_) <= 1e-9 * dt_;
}

TimeSeries::TimeSeries(TimeGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("TimeSeries: " + std::to_string(values_.size()) +
                          " values for a grid of " + std::to_string(grid_.size()));
  }
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) {
      throw InvalidArgument("TimeSeries: non-finite value at sample " + std::to_string(j));
    }
  }
}

TimeSeries::TimeSeries(TimeGrid grid) : grid_(grid), values_(grid.size(), 0.0) {}

double TimeSeries::max() const { return *std::max_element(values_.begin(), values_.end()); }
double TimeSeries::min() const { return *std::min_element(values_.begin(), values_.end()); }

double TimeSeries::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

GammaParams::GammaParams(double shape, double scale) : shape_k(shape), scale_q(scale) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InvalidArgument("GammaParams: shape K must be > 0");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("GammaParams: scale Q must be > 0");
  }
}

TimeSeries gamma_pdf(const GammaParams& params, const TimeGrid& grid) {
  const double k = params.shape_k;
  const double q = params.scale_q;
  if (grid.t0() < 0.0) throw InvalidArgument("gamma_pdf: grid starts before t = 0");
  // t^(K-1) is unbounded at the origin for K < 1.
  if (k < 1.0 && grid.t0() == 0.0) {
    throw InvalidArgument("gamma_pdf: shape K < 1 is singular at t = 0");
  }

  const double log_norm = std::lgamma(k) + k * std::log(q);
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double t = grid.time(j);
    if (t == 0.0) {
      v[j] = (k == 1.0) ? 1.0 / q : 0.0;
    } else {
      v[j] = std::exp((k - 1.0) * std::log(t) - t / q - log_norm);
    }
  }
  return TimeSeries(grid, std::move(v));
}

TimeSeries gamma_survival(const GammaParams& params, const TimeGrid& grid) {
  if (grid.t0() < 0.0) throw InvalidArgument("gamma_survival: grid starts before t = 0");
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double t = grid.time(j);
    v[j] = (t == 0.0) ? 1.0 : boost::math::gamma_q(params.shape_k, t / params.scale_q);
  }
  return TimeSeries(grid, std::move(v));
}

TimeSeries normalize_unit_peak(const TimeSeries& ts) {
  const double lo = ts.min();
  const double hi = ts.max();
  if (!(hi > lo)) throw NumericalError("normalize_unit_peak: constant input has zero range");
  std::vector<double> v(ts.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = (ts[j] - lo) / (hi - lo);
  return TimeSeries(ts.grid(), std::move(v));
}

TimeSeries cumulative_integral(const TimeSeries& ts) {
  const double half_dt = 0.5 * ts.grid().dt();
  std::vector<double> v(ts.size());
  v[0] = 0.0;
  for (std::size_t j = 1; j < v.size(); ++j) v[j] = v[j - 1] + half_dt * (ts[j - 1] + ts[j]);
  return TimeSeries(ts.grid(), std::move(v));
}

double integrate(const TimeSeries& ts) {
  double sum = 0.5 * (ts[0] + ts[ts.size() - 1]);
  for (std::size_t j = 1; j + 1 < ts.size(); ++j) sum += ts[j];
  return sum * ts.grid().dt();
}

TimeSeries residue_from_pdf(const TimeSeries& h) {
  std::vector<double> density(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (h[j] < -kNegativePdfTolerance) {
      throw InvalidArgument("residue_from_pdf: negative density " + std::to_string(h[j]) +
                            " at sample " + std::to_string(j));
    }
    density[j] = std::max(h[j], 0.0);
  }
  const TimeSeries cdf = cumulative_integral(TimeSeries(h.grid(), std::move(density)));
  std::vector<double> r(h.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = std::max(0.0, 1.0 - cdf[j]);
  return TimeSeries(h.grid(), std::move(r));
}

TimeSeries scale_by(const TimeSeries& ts, double a) {
  if (!std::isfinite(a)) throw InvalidArgument("scale_by: factor must be finite");
  std::vector<double> v(ts.values().begin(), ts.values().end());
  for (double& x : v) x *= a;
  return TimeSeries(ts.grid(), std::move(v));
}

TimeSeries finite_diff_derivative(const TimeSeries& ts) {
  const std::size_t n = ts.size();
  if (n < 3) throw InvalidArgument("finite_diff_derivative: need at least 3 samples");
  const double inv2dt = 1.0 / (2.0 * ts.grid().dt());
  std::vector<double> d(n);
  d[0] = (-3.0 * ts[0] + 4.0 * ts[1] - ts[2]) * inv2dt;
  for (std::size_t j = 1; j + 1 < n; ++j) d[j] = (ts[j + 1] - ts[j - 1]) * inv2dt;
  d[n - 1] = (3.0 * ts[n - 1] - 4.0 * ts[n - 2] + ts[n - 3]) * inv2dt;
  return TimeSeries(ts.grid(), std::move(d));
}

double raw_moment(const TimeSeries& ts, int order) {
  if (order < 0) throw InvalidArgument("raw_moment: order must be >= 0");
  std::vector<double> w(ts.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::pow(ts.grid().time(j), order) * ts[j];
  }
  return integrate(TimeSeries(ts.grid(), std::move(w)));
}

TimeSeries add_noise(const TimeSeries& ts, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
    throw InvalidArgument("add_noise: sigma must be >= 0");
  }
  std::vector<double> v(ts.values().begin(), ts.values().end());
  const double sd = spec.sigma * ts.max_abs();
  if (sd == 0.0) return TimeSeries(ts.grid(), std::move(v));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> eps(0.0, sd);
  for (double& x : v) x += eps(rng);
  return TimeSeries(ts.grid(), std::move(v));
}

double relative_l2_error(std::span<const double> x, std::span<const double> ref) {
  if (x.size() != ref.size()) throw InvalidArgument("relative_l2_error: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    num += (x[j] - ref[j]) * (x[j] - ref[j]);
    den += ref[j] * ref[j];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace perfdecon::signals
