#pragma once

// Fourier-domain operations: the DFT pair, convolution and deconvolution,
// spectral differentiation with optional even extension, and brick-wall
// low-pass filtering.
//
// Conventions: coefficient k of an n-point transform is
//   X_k = sum_j x_j exp(-2 pi i j k / n),
// and its signed wavenumber is k~ = k for k <= n/2, k - n otherwise, so the
// angular frequency is 2 pi k~ / P with period P = n dt.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "perfdecon/signals.hpp"

namespace perfdecon::spectral {

using signals::TimeGrid;
using signals::TimeSeries;
using Complex = std::complex<double>;

/// Relative imaginary residue accepted when returning to the real line.
inline constexpr double kImagResidueTolerance = 1e-10;

class Spectrum {
 public:
  /// `grid` describes the time-domain samples the coefficients came from.
  Spectrum(TimeGrid grid, std::vector<Complex> coeffs);

  const TimeGrid& grid() const { return grid_; }
  std::span<const Complex> coeffs() const { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }
  const Complex& operator[](std::size_t k) const { return coeffs_[k]; }
  double period() const { return static_cast<double>(coeffs_.size()) * grid_.dt(); }

 private:
  TimeGrid grid_;
  std::vector<Complex> coeffs_;
};

enum class ExtensionMode { None, EvenMirror };

/// Keeps modes with |k~| <= cutoff_fraction * n/2; DC is always kept.
struct FilterSpec {
  double cutoff_fraction;

  explicit FilterSpec(double fraction);
};

/// Largest imaginary residue seen across inverse transforms, relative to the
/// magnitude of the reconstructed signal.
struct SpectralDiagnostics {
  double max_imag_residue = 0.0;

  void record(double residue);
};

/// Signed wavenumber of coefficient k in an n-point transform.
long signed_wavenumber(std::size_t k, std::size_t n);

Spectrum dft_forward(const TimeSeries& ts);

/// Inverse transform back to a real series. The imaginary part is discarded
/// after checking it is below kImagResidueTolerance (NumericalError otherwise).
TimeSeries dft_inverse(const Spectrum& sp, SpectralDiagnostics* diag = nullptr);

/// Linear convolution scaled by dt (approximates the continuous integral),
/// via zero-padding to the next power of two >= 2n-1, truncated to the grid.
TimeSeries convolve_fft(const TimeSeries& a, const TimeSeries& b);

/// Same contract as convolve_fft by O(n^2) direct summation.
TimeSeries convolve_direct(const TimeSeries& a, const TimeSeries& b);

/// Recovers k from c = a (*) k. With reg = 0 this is the raw quotient C/A and
/// any |A_k| at round-off level is an error; with reg > 0 it is the Tikhonov
/// quotient C conj(A) / (|A|^2 + reg^2 max|A|^2).
TimeSeries deconvolve_fft(const TimeSeries& c, const TimeSeries& a, double reg,
                          SpectralDiagnostics* diag = nullptr);

/// [v0 .. v_{n-1}, v_{n-2} .. v1], length 2n-2, same dt.
TimeSeries even_extension(const TimeSeries& ts);

/// First n samples of a length 2n-2 extension.
TimeSeries restrict_extension(const TimeSeries& ts_ext, std::size_t n);

/// Forward transform, multiply by i*omega_k (Nyquist zeroed for even length,
/// modes above the cutoff zeroed when `filter` is set), inverse transform.
/// With EvenMirror the series is extended first and restricted afterwards.
TimeSeries spectral_derivative(const TimeSeries& ts, ExtensionMode mode,
                               const std::optional<FilterSpec>& filter,
                               SpectralDiagnostics* diag = nullptr);

/// Zeroes every coefficient with |k~| > cutoff_fraction * n/2.
TimeSeries low_pass_filter(const TimeSeries& ts, const FilterSpec& filter,
                           SpectralDiagnostics* diag = nullptr);

}  // namespace perfdecon::spectral
