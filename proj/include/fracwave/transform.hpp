#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "fracwave/errors.hpp"
#include "fracwave/field.hpp"
#include "fracwave/grid.hpp"

namespace fracwave {

/// Tolerance for the conjugate symmetry demanded of real-valued output,
/// relative to max(1, largest coefficient magnitude).
inline constexpr double kSymmetryTolerance = 1e-10;

/// Largest grid the direct-summation transform accepts.
inline constexpr std::size_t kOracleMaxPoints = 1024;

namespace detail {

// FFTW planning is not thread-safe, execution on caller-owned arrays is.
class FftPlanCache {
 public:
  struct Plans {
    fftw_plan forward;
    fftw_plan backward;
  };

  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  Plans get(std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<Complex> in(n), out(n);
    auto* pin = reinterpret_cast<fftw_complex*>(in.data());
    auto* pout = reinterpret_cast<fftw_complex*>(out.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int ni = static_cast<int>(n);
    Plans p{fftw_plan_dft_1d(ni, pin, pout, FFTW_FORWARD, flags),
            fftw_plan_dft_1d(ni, pin, pout, FFTW_BACKWARD, flags)};
    plans_.emplace(n, p);
    return p;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  std::mutex mutex_;
  std::map<std::size_t, Plans> plans_;
};

inline void execute(fftw_plan plan, std::vector<Complex>& in, std::vector<Complex>& out) {
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

// FFTW order (0..N/2-1, -N/2..-1) and the signed layout differ by a rotation of N/2.
inline std::size_t fftw_to_signed(std::size_t q, std::size_t n) {
  return q < n / 2 ? q + n / 2 : q - n / 2;
}

}  // namespace detail

/// Largest conjugate-symmetry defect of the coefficients, including the
/// imaginary parts of the self-conjugate mean and Nyquist modes.
inline double symmetry_defect(const SpectralField& c) {
  const Grid& g = c.grid();
  const long half = static_cast<long>(g.size() / 2);
  double defect = std::max(std::abs(c[g.position(0)].imag()),
                           std::abs(c[g.position(-half)].imag()));
  for (long j = 1; j < half; ++j)
    defect = std::max(defect, std::abs(c[g.position(-j)] - std::conj(c[g.position(j)])));
  return defect;
}

inline SpectralField forward_transform(const RealField& u) {
  u.check_finite("forward_transform input");
  const std::size_t n = u.size();
  const auto plans = detail::FftPlanCache::instance().get(n);
  std::vector<Complex> in(u.values().begin(), u.values().end()), out(n);
  detail::execute(plans.forward, in, out);
  SpectralField c(u.grid());
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t q = 0; q < n; ++q) c[detail::fftw_to_signed(q, n)] = out[q] * scale;
  // Exact Hermitian symmetry, so later multipliers cannot amplify round-off
  // asymmetry in the high modes.
  const Grid& g = u.grid();
  const long half = static_cast<long>(n / 2);
  for (long j = 1; j < half; ++j) {
    const Complex avg = 0.5 * (c[g.position(j)] + std::conj(c[g.position(-j)]));
    c[g.position(j)] = avg;
    c[g.position(-j)] = std::conj(avg);
  }
  c[g.position(0)].imag(0.0);
  c[g.position(-half)].imag(0.0);
  return c;
}

/// Synthesizes real grid values; the coefficients must be conjugate-symmetric.
inline RealField inverse_transform(const SpectralField& c) {
  c.check_finite("inverse_transform input");
  double scale = 1.0;
  for (const auto& v : c.values()) scale = std::max(scale, std::abs(v));
  if (symmetry_defect(c) > kSymmetryTolerance * scale)
    throw SymmetryError("coefficients are not conjugate-symmetric; real output impossible");
  const std::size_t n = c.size();
  const auto plans = detail::FftPlanCache::instance().get(n);
  std::vector<Complex> in(n), out(n);
  for (std::size_t q = 0; q < n; ++q) in[q] = c[detail::fftw_to_signed(q, n)];
  detail::execute(plans.backward, in, out);
  RealField u(c.grid());
  for (std::size_t j = 0; j < n; ++j) u[j] = out[j].real();
  u.check_finite("inverse_transform output");
  return u;
}

/// Direct O(N^2) summation with the same normalization as forward_transform.
/// Only meant as an independent reference in tests.
inline SpectralField dft_oracle(const RealField& u) {
  const std::size_t n = u.size();
  if (n > kOracleMaxPoints)
    throw OracleGuardError("dft_oracle refuses N=" + std::to_string(n) + " (limit " +
                           std::to_string(kOracleMaxPoints) + ")");
  u.check_finite("dft_oracle input");
  const Grid& g = u.grid();
  SpectralField c(g);
  for (std::size_t p = 0; p < n; ++p) {
    const long j = g.mode_index(p);
    Complex acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      // Reduce j*m mod N first so the angle stays small and exact.
      const long r = ((j * static_cast<long>(m)) % static_cast<long>(n) + static_cast<long>(n)) %
                     static_cast<long>(n);
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
      acc += u[m] * Complex(std::cos(angle), std::sin(angle));
    }
    c[p] = acc / static_cast<double>(n);
  }
  return c;
}

}  // namespace fracwave
