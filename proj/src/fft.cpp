#include "fft.hpp"

#include <algorithm>
#include <memory>
#include <mutex>

#include <fftw3.h>

#include "perfdecon/error.hpp"

namespace perfdecon::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> allocate(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(count, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan plan) : plan_(plan) {
    if (plan_ == nullptr) throw NumericalError("FFTW failed to create a plan");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace

std::vector<Complex> forward_real(std::span<const double> x, std::size_t length) {
  const std::size_t n = length;
  const std::size_t half = n / 2 + 1;
  auto in = allocate<double>(n);
  auto out = allocate<fftw_complex>(half);

  std::unique_ptr<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = std::make_unique<Plan>(
        fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  std::fill(in.get(), in.get() + n, 0.0);
  std::copy(x.begin(), x.end(), in.get());
  plan->execute();

  std::vector<Complex> spectrum(n);
  for (std::size_t k = 0; k < half; ++k) spectrum[k] = Complex(out[k][0], out[k][1]);
  for (std::size_t k = half; k < n; ++k) spectrum[k] = std::conj(spectrum[n - k]);
  return spectrum;
}

std::vector<Complex> inverse(std::span<const Complex> spectrum) {
  const std::size_t n = spectrum.size();
  auto in = allocate<fftw_complex>(n);
  auto out = allocate<fftw_complex>(n);

  std::unique_ptr<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = std::make_unique<Plan>(fftw_plan_dft_1d(static_cast<int>(n), in.get(), out.get(),
                                                   FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  for (std::size_t k = 0; k < n; ++k) {
    in[k][0] = spectrum[k].real();
    in[k][1] = spectrum[k].imag();
  }
  plan->execute();

  const double scale = 1.0 / static_cast<double>(n);
  std::vector<Complex> y(n);
  for (std::size_t j = 0; j < n; ++j) y[j] = Complex(out[j][0] * scale, out[j][1] * scale);
  return y;
}

}  // namespace perfdecon::detail
