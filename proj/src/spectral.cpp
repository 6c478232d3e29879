#include "perfdecon/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "perfdecon/error.hpp"

namespace perfdecon::spectral {

namespace {

void require_same_grid(const TimeSeries& a, const TimeSeries& b, const char* what) {
  if (!a.grid().matches(b.grid())) {
    throw InvalidArgument(std::string(what) + ": inputs are sampled on different grids");
  }
}

bool keeps_mode(long wavenumber, std::size_t n, const FilterSpec& filter) {
  return std::abs(static_cast<double>(wavenumber)) <=
         filter.cutoff_fraction * (static_cast<double>(n) / 2.0);
}

// Derivative of the trigonometric interpolant of a periodic series.
TimeSeries periodic_derivative(const TimeSeries& ts, const std::optional<FilterSpec>& filter,
                               SpectralDiagnostics* diag) {
  const Spectrum sp = dft_forward(ts);
  const std::size_t n = sp.size();
  const double base = 2.0 * std::numbers::pi / sp.period();

  std::vector<Complex> d(n);
  for (std::size_t k = 0; k < n; ++k) {
    const long kt = signed_wavenumber(k, n);
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    if (nyquist || (filter && !keeps_mode(kt, n, *filter))) continue;
    const double omega = base * static_cast<double>(kt);
    // i*omega*(re + i im) written out so conjugate pairs stay exactly conjugate.
    d[k] = Complex(-omega * sp[k].imag(), omega * sp[k].real());
  }
  return dft_inverse(Spectrum(ts.grid(), std::move(d)), diag);
}

}  // namespace

Spectrum::Spectrum(TimeGrid grid, std::vector<Complex> coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_.size()) {
    throw InvalidArgument("Spectrum: coefficient count does not match the grid");
  }
}

FilterSpec::FilterSpec(double fraction) : cutoff_fraction(fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("FilterSpec: cutoff_fraction must lie in (0, 1]");
  }
}

void SpectralDiagnostics::record(double residue) {
  max_imag_residue = std::max(max_imag_residue, residue);
}

long signed_wavenumber(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

Spectrum dft_forward(const TimeSeries& ts) {
  return Spectrum(ts.grid(), detail::forward_real(ts.values(), ts.size()));
}

TimeSeries dft_inverse(const Spectrum& sp, SpectralDiagnostics* diag) {
  const std::vector<Complex> y = detail::inverse(sp.coeffs());
  double scale = 0.0;
  double imag = 0.0;
  for (const Complex& v : y) {
    scale = std::max(scale, std::abs(v));
    imag = std::max(imag, std::abs(v.imag()));
  }
  const double residue = scale > 0.0 ? imag / scale : 0.0;
  if (residue > kImagResidueTolerance) {
    throw NumericalError("dft_inverse: reconstruction is not real (relative imaginary residue " +
                         std::to_string(residue) + ")");
  }
  if (diag != nullptr) diag->record(residue);

  std::vector<double> real(y.size());
  std::transform(y.begin(), y.end(), real.begin(), [](const Complex& v) { return v.real(); });
  return TimeSeries(sp.grid(), std::move(real));
}

TimeSeries convolve_fft(const TimeSeries& a, const TimeSeries& b) {
  require_same_grid(a, b, "convolve_fft");
  const std::size_t n = a.size();
  const std::size_t padded = std::bit_ceil(2 * n - 1);

  std::vector<Complex> fa = detail::forward_real(a.values(), padded);
  const std::vector<Complex> fb = detail::forward_real(b.values(), padded);
  for (std::size_t k = 0; k < padded; ++k) fa[k] *= fb[k];
  const std::vector<Complex> full = detail::inverse(fa);

  const double dt = a.grid().dt();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = full[j].real() * dt;
  return TimeSeries(a.grid(), std::move(out));
}

TimeSeries convolve_direct(const TimeSeries& a, const TimeSeries& b) {
  require_same_grid(a, b, "convolve_direct");
  const std::size_t n = a.size();
  const double dt = a.grid().dt();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i <= j; ++i) sum += a[i] * b[j - i];
    out[j] = sum * dt;
  }
  return TimeSeries(a.grid(), std::move(out));
}

TimeSeries deconvolve_fft(const TimeSeries& c, const TimeSeries& a, double reg,
                          SpectralDiagnostics* diag) {
  require_same_grid(c, a, "deconvolve_fft");
  if (!(reg >= 0.0) || !std::isfinite(reg)) {
    throw InvalidArgument("deconvolve_fft: regularization must be >= 0");
  }
  if (a.max_abs() == 0.0) throw InvalidArgument("deconvolve_fft: divisor is identically zero");

  const Spectrum fa = dft_forward(a);
  const Spectrum fc = dft_forward(c);
  const std::size_t n = fa.size();

  double peak = 0.0;
  for (const Complex& v : fa.coeffs()) peak = std::max(peak, std::abs(v));

  std::vector<Complex> quotient(n);
  if (reg == 0.0) {
    // Round-off floor of an n-point transform.
    const double guard = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * peak;
    for (std::size_t k = 0; k < n; ++k) {
      if (std::abs(fa[k]) <= guard) {
        throw NumericalError("deconvolve_fft: divisor mode " + std::to_string(k) +
                             " vanishes (|A_k| = " + std::to_string(std::abs(fa[k])) +
                             "); division is ill-posed, use reg > 0");
      }
      quotient[k] = fc[k] / fa[k];
    }
  } else {
    const double damping = reg * reg * peak * peak;
    for (std::size_t k = 0; k < n; ++k) {
      quotient[k] = fc[k] * std::conj(fa[k]) / (std::norm(fa[k]) + damping);
    }
  }

  const TimeSeries k = dft_inverse(Spectrum(c.grid(), std::move(quotient)), diag);
  return signals::scale_by(k, 1.0 / c.grid().dt());
}

TimeSeries even_extension(const TimeSeries& ts) {
  const std::size_t n = ts.size();
  std::vector<double> ext;
  ext.reserve(2 * n - 2);
  ext.insert(ext.end(), ts.values().begin(), ts.values().end());
  for (std::size_t j = n - 2; j >= 1; --j) ext.push_back(ts[j]);
  const TimeGrid& g = ts.grid();
  return TimeSeries(TimeGrid(g.t0(), g.dt(), 2 * n - 2), std::move(ext));
}

TimeSeries restrict_extension(const TimeSeries& ts_ext, std::size_t n) {
  if (n < 2 || ts_ext.size() != 2 * n - 2) {
    throw InvalidArgument("restrict_extension: expected " + std::to_string(2 * n - 2) +
                          " samples, got " + std::to_string(ts_ext.size()));
  }
  const TimeGrid& g = ts_ext.grid();
  std::vector<double> v(ts_ext.values().begin(), ts_ext.values().begin() + n);
  return TimeSeries(TimeGrid(g.t0(), g.dt(), n), std::move(v));
}

TimeSeries spectral_derivative(const TimeSeries& ts, ExtensionMode mode,
                               const std::optional<FilterSpec>& filter,
                               SpectralDiagnostics* diag) {
  if (ts.size() < 4) throw InvalidArgument("spectral_derivative: need at least 4 samples");
  if (mode == ExtensionMode::None) return periodic_derivative(ts, filter, diag);
  const TimeSeries d = periodic_derivative(even_extension(ts), filter, diag);
  return restrict_extension(d, ts.size());
}

TimeSeries low_pass_filter(const TimeSeries& ts, const FilterSpec& filter,
                           SpectralDiagnostics* diag) {
  const FilterSpec checked(filter.cutoff_fraction);
  const Spectrum sp = dft_forward(ts);
  const std::size_t n = sp.size();
  std::vector<Complex> kept(sp.coeffs().begin(), sp.coeffs().end());
  for (std::size_t k = 0; k < n; ++k) {
    if (!keeps_mode(signed_wavenumber(k, n), n, checked)) kept[k] = Complex(0.0, 0.0);
  }
  return dft_inverse(Spectrum(ts.grid(), std::move(kept)), diag);
}

}  // namespace perfdecon::spectral
