#pragma once

#include <cmath>
#include <string>

#include "fracwave/errors.hpp"
#include "fracwave/field.hpp"
#include "fracwave/spectral.hpp"
#include "fracwave/transform.hpp"

namespace fracwave {

enum class OrderCheck {
  relaxed,  ///< nu >= 1/2
  strict,   ///< nu >= 1, the range the well-posedness theory covers
};

/// Fractional exponent nu of (-d^2/dx^2)^nu. A runtime value so one binary
/// can sweep it.
class FractionalOrder {
 public:
  explicit FractionalOrder(double nu, OrderCheck check = OrderCheck::relaxed) : nu_(nu) {
    if (!std::isfinite(nu)) throw ParameterError("fractional order must be finite");
    if (check == OrderCheck::strict && nu < 1.0)
      throw ParameterError("fractional order nu=" + std::to_string(nu) +
                           " below 1 (pass the low-nu override to allow nu >= 1/2)");
    if (nu < 0.5)
      throw ParameterError("fractional order nu=" + std::to_string(nu) + " below 1/2");
  }

  double value() const { return nu_; }

 private:
  double nu_;
};

/// Whether pointwise products are followed by the 2/3-rule truncation.
enum class Dealias { on, off };

namespace symbols {

/// |k|^(2nu), exactly zero at k = 0.
inline double laplacian(double k, FractionalOrder nu) {
  return k == 0.0 ? 0.0 : std::pow(std::abs(k), 2.0 * nu.value());
}

/// (1 + |k|^(2nu))^(p/(2nu)).
inline double lambda(double k, double p, FractionalOrder nu) {
  return std::pow(1.0 + laplacian(k, nu), p / (2.0 * nu.value()));
}

}  // namespace symbols

/// Spectral-space building blocks shared by the operators and the models.
namespace spectral_ops {

inline SpectralField laplacian(SpectralField c, FractionalOrder nu) {
  return apply_symbol(std::move(c), [nu](double k) { return symbols::laplacian(k, nu); });
}

inline SpectralField lambda_pow(SpectralField c, double p, FractionalOrder nu) {
  if (!std::isfinite(p)) throw ParameterError("Lambda power must be finite");
  if (p == 0.0) return c;
  return apply_symbol(std::move(c), [p, nu](double k) { return symbols::lambda(k, p, nu); });
}

inline SpectralField helmholtz_inverse(SpectralField c, double mu, FractionalOrder nu) {
  if (!(mu > 0.0)) throw ParameterError("Helmholtz coefficient must be positive");
  return apply_symbol(std::move(c),
                      [mu, nu](double k) { return 1.0 / (1.0 + mu * symbols::laplacian(k, nu)); });
}

/// Transform of a pointwise product, truncated when requested.
inline SpectralField product(const RealField& a, const RealField& b, Dealias d) {
  SpectralField c = forward_transform(multiply(a, b));
  return d == Dealias::on ? dealias(std::move(c)) : c;
}

/// [u, L_nu] w = u L_nu w - L_nu(u w), given w in physical and spectral form.
inline SpectralField commutator(const RealField& u, const RealField& w,
                                const SpectralField& w_hat, FractionalOrder nu, Dealias d) {
  const RealField lw = inverse_transform(laplacian(w_hat, nu));
  SpectralField out = product(u, lw, d);
  out -= laplacian(product(u, w, d), nu);
  return out;
}

/// A(u) z in spectral form, with z given by its coefficients.
inline SpectralField apply_A(const RealField& u, const SpectralField& z_hat, FractionalOrder nu,
                             Dealias d) {
  detail::require_same_grid(u.grid(), z_hat.grid(), "apply_A");
  const SpectralField zx_hat = differentiate(z_hat);
  const RealField zx = inverse_transform(zx_hat);
  SpectralField out = product(constant_field(u.grid(), 1.0) + u, zx, d);
  out += lambda_pow(commutator(u, zx, zx_hat, nu, d), -2.0 * nu.value(), nu);
  return out;
}

}  // namespace spectral_ops

inline RealField fractional_laplacian(const RealField& u, FractionalOrder nu) {
  return inverse_transform(spectral_ops::laplacian(forward_transform(u), nu));
}

/// Lambda^p with Lambda = (1 + (-d^2/dx^2)^nu)^(1/(2nu)). Negative p is fine.
inline RealField lambda_pow(const RealField& u, double p, FractionalOrder nu) {
  return inverse_transform(spectral_ops::lambda_pow(forward_transform(u), p, nu));
}

/// (1 + mu (-d^2/dx^2)^nu)^(-1).
inline RealField helmholtz_inverse(const RealField& u, double mu, FractionalOrder nu) {
  return inverse_transform(spectral_ops::helmholtz_inverse(forward_transform(u), mu, nu));
}

/// [u, (-d^2/dx^2)^nu] w = u L w - L(u w).
inline RealField commutator_apply(const RealField& u, const RealField& w, FractionalOrder nu,
                                  Dealias d = Dealias::on) {
  detail::require_same_grid(u.grid(), w.grid(), "commutator_apply");
  return inverse_transform(spectral_ops::commutator(u, w, forward_transform(w), nu, d));
}

/// A(u) z = (1+u) z_x + Lambda^(-2nu) [u, L] z_x.
inline RealField apply_A(const RealField& u, const RealField& z, FractionalOrder nu,
                         Dealias d = Dealias::on) {
  detail::require_same_grid(u.grid(), z.grid(), "apply_A");
  return inverse_transform(spectral_ops::apply_A(u, forward_transform(z), nu, d));
}

/// B(u) w = Lambda A(u) Lambda^(-1) w - A(u) w.
inline RealField apply_B(const RealField& u, const RealField& w, FractionalOrder nu,
                         Dealias d = Dealias::on) {
  detail::require_same_grid(u.grid(), w.grid(), "apply_B");
  const SpectralField w_hat = forward_transform(w);
  SpectralField out = spectral_ops::lambda_pow(
      spectral_ops::apply_A(u, spectral_ops::lambda_pow(w_hat, -1.0, nu), nu, d), 1.0, nu);
  out -= spectral_ops::apply_A(u, w_hat, nu, d);
  return inverse_transform(out);
}

/// f(u) = Lambda^(-2nu) d/dx (u^2).
inline RealField apply_f(const RealField& u, FractionalOrder nu, Dealias d = Dealias::on) {
  SpectralField sq = differentiate(spectral_ops::product(u, u, d));
  return inverse_transform(spectral_ops::lambda_pow(std::move(sq), -2.0 * nu.value(), nu));
}

}  // namespace fracwave
