#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "fracwave/errors.hpp"
#include "fracwave/field.hpp"
#include "fracwave/operators.hpp"
#include "fracwave/spectral.hpp"
#include "fracwave/transform.hpp"

namespace fracwave {

enum class ModelKind { fch, fkdv, fbbm, linearized_fch };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::fch: return "fch";
    case ModelKind::fkdv: return "fkdv";
    case ModelKind::fbbm: return "fbbm";
    case ModelKind::linearized_fch: return "linearized_fch";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "fch") return ModelKind::fch;
  if (s == "fkdv") return ModelKind::fkdv;
  if (s == "fbbm") return ModelKind::fbbm;
  if (s == "linearized_fch") return ModelKind::linearized_fch;
  return std::nullopt;
}

/// Constant coefficients of the family
///   (1 + c_evo L) u_t = -[c_adv u_x + c_nl u u_x + c_disp L u_x
///                         + c_mix (2 L(u u_x) + u L u_x)],   L = (-d^2/dx^2)^nu.
struct Coefficients {
  double c_adv = 1.0;
  double c_nl = 1.0;
  double c_disp = 0.0;
  double c_evo = 0.0;
  double c_mix = 0.0;

  friend bool operator==(const Coefficients&, const Coefficients&) = default;
};

inline Coefficients default_coefficients(ModelKind kind) {
  switch (kind) {
    case ModelKind::fch: return {1.0, 1.0, 0.75, 1.25, 0.25};
    case ModelKind::fkdv: return {1.0, 1.0, -0.5, 0.0, 0.0};
    case ModelKind::fbbm: return {1.0, 1.0, 0.75, 1.25, 0.0};
    case ModelKind::linearized_fch: return {1.0, 0.0, 0.75, 1.25, 0.0};
  }
  return {};
}

class ModelParams {
 public:
  ModelParams(ModelKind kind, FractionalOrder nu, Coefficients c, Dealias dealias = Dealias::on)
      : kind_(kind), nu_(nu), c_(c), dealias_(dealias) {
    validate();
  }

  /// Default coefficients for the given model; nu must be >= 1 unless relaxed.
  static ModelParams defaults(ModelKind kind, double nu, OrderCheck check = OrderCheck::strict) {
    return ModelParams(kind, FractionalOrder(nu, check), default_coefficients(kind));
  }

  ModelKind kind() const { return kind_; }
  FractionalOrder nu() const { return nu_; }
  const Coefficients& coefficients() const { return c_; }
  Dealias dealias() const { return dealias_; }

  ModelParams with_dealias(Dealias d) const { return ModelParams(kind_, nu_, c_, d); }

 private:
  void validate() const {
    for (double v : {c_.c_adv, c_.c_nl, c_.c_disp, c_.c_evo, c_.c_mix})
      if (!std::isfinite(v)) throw ParameterError("model coefficients must be finite");
    if (c_.c_evo < 0.0) throw ParameterError("c_evo must be >= 0");
    const std::string name(to_string(kind_));
    switch (kind_) {
      case ModelKind::fch: break;
      case ModelKind::fkdv:
        if (c_.c_evo != 0.0 || c_.c_mix != 0.0)
          throw ParameterError(name + " requires c_evo = 0 and c_mix = 0");
        break;
      case ModelKind::fbbm:
        if (c_.c_mix != 0.0) throw ParameterError(name + " requires c_mix = 0");
        break;
      case ModelKind::linearized_fch:
        if (c_.c_nl != 0.0 || c_.c_mix != 0.0)
          throw ParameterError(name + " requires c_nl = 0 and c_mix = 0");
        break;
    }
  }

  ModelKind kind_;
  FractionalOrder nu_;
  Coefficients c_;
  Dealias dealias_;
};

/// Phase speed of mode k under the linearized model,
/// (c_adv + c_disp |k|^(2nu)) / (1 + c_evo |k|^(2nu)).
inline double dispersion_speed(double k, const ModelParams& p) {
  const auto& c = p.coefficients();
  const double lk = symbols::laplacian(k, p.nu());
  return (c.c_adv + c.c_disp * lk) / (1.0 + c.c_evo * lk);
}

/// Symbol of the linear part of du/dt, -i k c(k). Zero at the Nyquist mode,
/// matching the spectral derivative.
inline SpectralField linear_part(SpectralField c, const ModelParams& p) {
  const Grid& g = c.grid();
  for (std::size_t q = 0; q < c.size(); ++q) {
    const double k = g.wavenumber(q);
    c[q] *= Complex(0.0, -k * dispersion_speed(k, p));
  }
  c[0] = 0.0;
  return c;
}

namespace detail {

// Bracketed nonlinear terms c_nl u u_x + c_mix (2 L(u u_x) + u L u_x), spectral.
inline SpectralField nonlinear_bracket(const RealField& u, const SpectralField& ux_hat,
                                       const ModelParams& p) {
  const auto& c = p.coefficients();
  SpectralField out(u.grid());
  if (c.c_nl == 0.0 && c.c_mix == 0.0) return out;
  const RealField ux = inverse_transform(ux_hat);
  const SpectralField uux = spectral_ops::product(u, ux, p.dealias());
  out += c.c_nl * uux;
  if (c.c_mix != 0.0) {
    const RealField l_ux = inverse_transform(spectral_ops::laplacian(ux_hat, p.nu()));
    SpectralField mixed = 2.0 * spectral_ops::laplacian(uux, p.nu());
    mixed += spectral_ops::product(u, l_ux, p.dealias());
    out += c.c_mix * mixed;
  }
  return out;
}

inline SpectralField solve_for_rate(SpectralField bracket, const ModelParams& p) {
  const double evo = p.coefficients().c_evo;
  if (evo > 0.0) bracket = spectral_ops::helmholtz_inverse(std::move(bracket), evo, p.nu());
  return -1.0 * bracket;
}

inline void require_kind(const ModelParams& p, ModelKind k, const char* fn) {
  if (p.kind() != k)
    throw ParameterError(std::string(fn) + " called with model kind " +
                         std::string(to_string(p.kind())));
}

}  // namespace detail

/// Nonlinear part of du/dt in spectral form: everything except linear_part.
inline SpectralField nonlinear_part(const RealField& u, const ModelParams& p) {
  const SpectralField ux_hat = differentiate(forward_transform(u));
  return detail::solve_for_rate(detail::nonlinear_bracket(u, ux_hat, p), p);
}

/// du/dt for any kind, evaluated from the coefficient set.
inline RealField rhs(const RealField& u, const ModelParams& p) {
  const auto& c = p.coefficients();
  const SpectralField ux_hat = differentiate(forward_transform(u));
  SpectralField bracket = c.c_adv * ux_hat;
  if (c.c_disp != 0.0) bracket += c.c_disp * spectral_ops::laplacian(ux_hat, p.nu());
  bracket += detail::nonlinear_bracket(u, ux_hat, p);
  return inverse_transform(detail::solve_for_rate(std::move(bracket), p));
}

inline RealField rhs_fch(const RealField& u, const ModelParams& p) {
  detail::require_kind(p, ModelKind::fch, "rhs_fch");
  return rhs(u, p);
}

inline RealField rhs_fkdv(const RealField& u, const ModelParams& p) {
  detail::require_kind(p, ModelKind::fkdv, "rhs_fkdv");
  return rhs(u, p);
}

inline RealField rhs_fbbm(const RealField& u, const ModelParams& p) {
  detail::require_kind(p, ModelKind::fbbm, "rhs_fbbm");
  return rhs(u, p);
}

inline RealField rhs_linearized(const RealField& u, const ModelParams& p) {
  detail::require_kind(p, ModelKind::linearized_fch, "rhs_linearized");
  return rhs(u, p);
}

/// Unit-coefficient quasi-linear form u_t = -A(u) u + f(u).
inline RealField rhs_quasilinear_normalized(const RealField& u, FractionalOrder nu,
                                            Dealias d = Dealias::on) {
  SpectralField out = -1.0 * spectral_ops::apply_A(u, forward_transform(u), nu, d);
  out += spectral_ops::lambda_pow(differentiate(spectral_ops::product(u, u, d)),
                                  -2.0 * nu.value(), nu);
  return inverse_transform(out);
}

/// Integral of u over the period, L * c_0.
inline double mass(const RealField& u) {
  return u.grid().length() * forward_transform(u)[u.grid().position(0)].real();
}

/// (1/2) integral of u^2, computed spectrally.
inline double momentum(const RealField& u) {
  const SpectralField c = forward_transform(u);
  double acc = 0.0;
  for (const auto& v : c.values()) acc += std::norm(v);
  return 0.5 * u.grid().length() * acc;
}

/// (L/2) sum (1 + c_evo |k|^(2nu)) |c_k|^2.
inline double fbbm_energy(const RealField& u, const ModelParams& p) {
  const SpectralField c = forward_transform(u);
  const Grid& g = u.grid();
  double acc = 0.0;
  for (std::size_t q = 0; q < c.size(); ++q)
    acc += (1.0 + p.coefficients().c_evo * symbols::laplacian(g.wavenumber(q), p.nu())) *
           std::norm(c[q]);
  return 0.5 * g.length() * acc;
}

}  // namespace fracwave
