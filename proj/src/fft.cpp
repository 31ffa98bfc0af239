#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace suspflow::fft {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct Plan {
  fftw_plan plan = nullptr;
  ~Plan() {
    if (plan) {
      std::lock_guard<std::mutex> lock(plan_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

std::vector<cplx> forward_real(const std::vector<double>& samples) {
  const int n = static_cast<int>(samples.size());
  std::vector<double> in = samples;
  std::vector<cplx> out(n / 2 + 1);
  Plan p;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    p.plan = fftw_plan_dft_r2c_1d(n, in.data(), as_fftw(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(p.plan);
  return out;
}

std::vector<double> inverse_real(const std::vector<cplx>& coeffs, std::size_t n) {
  std::vector<cplx> in = coeffs;
  std::vector<double> out(n);
  Plan p;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    p.plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), as_fftw(in.data()), out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(p.plan);
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

namespace {

std::vector<cplx> dft_2d(const std::vector<cplx>& data, std::size_t n, int sign) {
  std::vector<cplx> in = data;
  std::vector<cplx> out(n * n);
  Plan p;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    p.plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), as_fftw(in.data()),
                              as_fftw(out.data()), sign, FFTW_ESTIMATE);
  }
  fftw_execute(p.plan);
  return out;
}

}  // namespace

std::vector<cplx> forward_2d(const std::vector<cplx>& data, std::size_t n) {
  return dft_2d(data, n, FFTW_FORWARD);
}

std::vector<cplx> inverse_2d(const std::vector<cplx>& data, std::size_t n) {
  auto out = dft_2d(data, n, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace suspflow::fft
