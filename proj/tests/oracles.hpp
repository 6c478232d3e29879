#pragma once

// Reference implementations that share no code with the library: an O(n^2)
// DFT, the gamma density from Boost's incomplete-gamma derivative, composite
// Simpson quadrature, and small random generators for property tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

using Complex = std::complex<double>;

inline std::vector<Complex> naive_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce j*k mod n first so the phase stays accurate for large n.
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) /
                           static_cast<double>(n);
      s += x[j] * Complex(std::cos(phase), std::sin(phase));
    }
    out[k] = s;
  }
  return out;
}

/// Gamma density with shape k and scale q at t.
inline double gamma_density(double k, double q, double t) {
  if (t <= 0.0) return (k == 1.0 && t == 0.0) ? 1.0 / q : 0.0;
  return boost::math::gamma_p_derivative(k, t / q) / q;
}

/// Composite Simpson rule with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  if (panels % 2 != 0) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double rel_l2(std::span<const double> x, std::span<const double> ref) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    num += (x[j] - ref[j]) * (x[j] - ref[j]);
    den += ref[j] * ref[j];
  }
  return std::sqrt(num / den);
}

inline double max_abs_diff(std::span<const double> x, std::span<const double> ref) {
  double m = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) m = std::max(m, std::abs(x[j] - ref[j]));
  return m;
}

/// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  std::vector<double> normals(std::size_t n) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng_);
    return v;
  }

  /// (K, Q) whose density has decayed to below 1e-14 of its mass by t_end,
  /// drawn by rejection from K in [k_lo, k_hi], Q in [q_lo, q_hi].
  std::pair<double, double> decaying_gamma(double k_lo, double k_hi, double q_lo, double q_hi,
                                           double t_end) {
    while (true) {
      const double k = uniform(k_lo, k_hi);
      const double q = uniform(q_lo, q_hi);
      if (boost::math::gamma_q(k, t_end / q) < 1e-14) return {k, q};
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
