#pragma once

// Thin FFTW wrapper. Plans are built per call (FFTW_ESTIMATE) under a global
// mutex, since FFTW's planner is not re-entrant; execution runs unlocked.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace perfdecon::detail {

using Complex = std::complex<double>;

/// Full-length spectrum of x zero-padded to `length` (>= x.size()), with the
/// upper half filled by conjugation so the result is exactly Hermitian.
std::vector<Complex> forward_real(std::span<const double> x, std::size_t length);

/// (1/n) sum_k X_k exp(+2 pi i j k / n).
std::vector<Complex> inverse(std::span<const Complex> spectrum);

}  // namespace perfdecon::detail
