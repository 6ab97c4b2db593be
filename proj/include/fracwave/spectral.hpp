#pragma once

#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <string>

#include "fracwave/errors.hpp"
#include "fracwave/field.hpp"
#include "fracwave/transform.hpp"

namespace fracwave {

template <typename F>
concept FourierSymbol = std::invocable<const F&, double> &&
                        std::convertible_to<std::invoke_result_t<const F&, double>, Complex>;

/// Coefficient-wise product c_k <- m(k) c_k, with k the physical wavenumber.
template <FourierSymbol F>
SpectralField apply_symbol(SpectralField c, const F& m) {
  const Grid& g = c.grid();
  for (std::size_t p = 0; p < c.size(); ++p) {
    const Complex mk = m(g.wavenumber(p));
    if (!detail::is_finite(mk))
      throw SymbolError("symbol is not finite at k=" + std::to_string(g.wavenumber(p)));
    c[p] *= mk;
  }
  return c;
}

/// Spectral d/dx. The Nyquist mode is dropped: i*k there has no conjugate
/// partner and would make the result complex.
inline SpectralField differentiate(SpectralField c) {
  const Grid& g = c.grid();
  for (std::size_t p = 0; p < c.size(); ++p) c[p] *= Complex(0.0, g.wavenumber(p));
  c[0] = 0.0;
  return c;
}

inline RealField differentiate(const RealField& u) {
  return inverse_transform(differentiate(forward_transform(u)));
}

/// 2/3-rule truncation: zero every mode with |j| > floor(N/3).
inline SpectralField dealias(SpectralField c) {
  const Grid& g = c.grid();
  const long cutoff = g.dealias_cutoff();
  for (std::size_t p = 0; p < c.size(); ++p)
    if (std::labs(g.mode_index(p)) > cutoff) c[p] = 0.0;
  return c;
}

/// H^s norm (L * sum (1+k^2)^s |c_k|^2)^(1/2).
inline double sobolev_norm(const SpectralField& c, double s) {
  if (!std::isfinite(s)) throw ParameterError("Sobolev index must be finite");
  const Grid& g = c.grid();
  double acc = 0.0;
  for (std::size_t p = 0; p < c.size(); ++p) {
    const double k = g.wavenumber(p);
    acc += std::pow(1.0 + k * k, s) * std::norm(c[p]);
  }
  return std::sqrt(g.length() * acc);
}

inline double sobolev_norm(const RealField& u, double s) {
  return sobolev_norm(forward_transform(u), s);
}

}  // namespace fracwave
