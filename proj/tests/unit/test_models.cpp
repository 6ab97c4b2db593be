#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracwave/models.hpp"
#include "support/random_fields.hpp"

namespace fracwave {
namespace {

using testing::smooth_random_field;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

RealField sin_k(const Grid& g, double k, double a = 1.0) {
  return sample(g, [k, a](double x) { return a * std::sin(k * x); });
}
RealField cos_k(const Grid& g, double k, double a = 1.0) {
  return sample(g, [k, a](double x) { return a * std::cos(k * x); });
}

ModelParams params(ModelKind kind, double nu = 1.0) { return ModelParams::defaults(kind, nu); }

TEST(ModelParams, KindDefaults) {
  EXPECT_EQ(default_coefficients(ModelKind::fch), (Coefficients{1.0, 1.0, 0.75, 1.25, 0.25}));
  EXPECT_EQ(default_coefficients(ModelKind::fkdv), (Coefficients{1.0, 1.0, -0.5, 0.0, 0.0}));
  EXPECT_EQ(default_coefficients(ModelKind::fbbm), (Coefficients{1.0, 1.0, 0.75, 1.25, 0.0}));
}

TEST(ModelParams, ConsistencyChecks) {
  const FractionalOrder nu(1.0);
  EXPECT_THROW(ModelParams(ModelKind::fch, nu, {1, 1, 0.75, -1.0, 0.25}), ParameterError);
  EXPECT_THROW(ModelParams(ModelKind::fkdv, nu, {1, 1, -0.5, 1.25, 0.0}), ParameterError);
  EXPECT_THROW(ModelParams(ModelKind::fbbm, nu, {1, 1, 0.75, 1.25, 0.25}), ParameterError);
  EXPECT_THROW(ModelParams(ModelKind::linearized_fch, nu, {1, 1, 0.75, 1.25, 0.0}), ParameterError);
  EXPECT_THROW(ModelParams::defaults(ModelKind::fch, 0.8), ParameterError);
  EXPECT_NO_THROW(ModelParams::defaults(ModelKind::fch, 0.8, OrderCheck::relaxed));
}

TEST(Models, KindMismatchRejected) {
  const Grid g(kTwoPi, 32);
  EXPECT_THROW(rhs_fch(RealField(g), params(ModelKind::fbbm)), ParameterError);
  EXPECT_THROW(rhs_fkdv(RealField(g), params(ModelKind::fch)), ParameterError);
  EXPECT_THROW(rhs_fbbm(RealField(g), params(ModelKind::fkdv)), ParameterError);
}

TEST(Models, ConstantsAreEquilibria) {
  const Grid g(kTwoPi, 64);
  for (ModelKind kind : {ModelKind::fch, ModelKind::fkdv, ModelKind::fbbm, ModelKind::linearized_fch})
    for (double c : {0.0, 1.0, -0.37, 5.0}) {
      const auto r = rhs(constant_field(g, c), params(kind, 1.5));
      EXPECT_LE(max_abs(r), 1e-13) << to_string(kind) << " c=" << c;
    }
  const auto zero = rhs_fch(RealField(g), params(ModelKind::fch));
  EXPECT_EQ(max_abs(zero), 0.0);
}

TEST(Models, FchSmallSineMovesAtSevenNinths) {
  const Grid g(kTwoPi, 32);
  const double eps = 1e-6;
  const auto r = rhs_fch(sin_k(g, 1, eps), params(ModelKind::fch));
  EXPECT_LE(max_abs_difference(r, cos_k(g, 1, -7.0 / 9.0 * eps)), 100 * eps * eps);
  const auto lin = rhs_linearized(sin_k(g, 1, eps), params(ModelKind::linearized_fch));
  EXPECT_LE(max_abs_difference(lin, cos_k(g, 1, -7.0 / 9.0 * eps)), 1e-20);
}

TEST(Models, FkdvSineClosedForm) {
  const Grid g(kTwoPi, 32);
  const auto r = rhs_fkdv(sin_k(g, 1), params(ModelKind::fkdv));
  const auto expect = cos_k(g, 1, -0.5) + sin_k(g, 2, -0.5);
  EXPECT_LE(max_abs_difference(r, expect), 1e-12);
  EXPECT_LE(max_abs(rhs_fkdv(constant_field(g, 2.0), params(ModelKind::fkdv))), 1e-15);
}

TEST(Models, FbbmAndFchShareLinearPart) {
  const Grid g(kTwoPi, 32);
  const double eps = 1e-6;
  const auto u = sin_k(g, 1, eps);
  const auto diff = rhs_fbbm(u, params(ModelKind::fbbm)) - rhs_fch(u, params(ModelKind::fch));
  EXPECT_LE(max_abs(diff), 10 * eps * eps);
  EXPECT_GT(max_abs(diff), 0.0);
}

TEST(Models, FchWithoutMixedTermIsFbbm) {
  const Grid g(kTwoPi, 64);
  auto c = default_coefficients(ModelKind::fch);
  c.c_mix = 0.0;
  for (double nu : {1.0, 1.5, 2.0}) {
    const ModelParams no_mix(ModelKind::fch, FractionalOrder(nu), c);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto u = smooth_random_field(g, seed, 20);
      EXPECT_LE(max_abs_difference(rhs(u, no_mix), rhs_fbbm(u, params(ModelKind::fbbm, nu))), 1e-12);
    }
  }
}

TEST(Models, LinearRegimeMatchesDispersionSpeed) {
  const Grid g(kTwoPi, 64);
  const double eps = 1e-6;
  for (ModelKind kind : {ModelKind::fch, ModelKind::fkdv, ModelKind::fbbm, ModelKind::linearized_fch})
    for (double nu : {1.0, 1.5})
      for (int k = 1; k <= 4; ++k) {
        const auto p = params(kind, nu);
        const auto u = sin_k(g, k, eps);
        const double c = dispersion_speed(k, p);
        const auto expect = -c * differentiate(u);
        EXPECT_LE(max_abs_difference(rhs(u, p), expect), 100 * eps * eps)
            << to_string(kind) << " nu=" << nu << " k=" << k;
      }
}

TEST(DispersionSpeed, ClosedForms) {
  EXPECT_NEAR(dispersion_speed(1.0, params(ModelKind::fch)), 7.0 / 9.0, 1e-15);
  EXPECT_NEAR(dispersion_speed(2.0, params(ModelKind::fkdv)), -1.0, 1e-15);
  for (ModelKind kind : {ModelKind::fch, ModelKind::fkdv, ModelKind::fbbm, ModelKind::linearized_fch})
    EXPECT_EQ(dispersion_speed(0.0, params(kind, 1.7)), 1.0);
  // fCH speeds decrease from 1 toward 3/5.
  double prev = 1.0;
  for (double k = 0.5; k < 200.0; k *= 1.5) {
    const double c = dispersion_speed(k, params(ModelKind::fch));
    EXPECT_LT(c, prev);
    EXPECT_GT(c, 0.6);
    prev = c;
  }
}

TEST(QuasiLinear, ZeroAndConstantsAreEquilibria) {
  const Grid g(kTwoPi, 64);
  EXPECT_EQ(max_abs(rhs_quasilinear_normalized(RealField(g), FractionalOrder(1.0))), 0.0);
  EXPECT_LE(max_abs(rhs_quasilinear_normalized(constant_field(g, 0.6), FractionalOrder(1.5))), 1e-14);
}

TEST(QuasiLinear, MatchesTermByTermRecomposition) {
  const Grid g(kTwoPi, 64);
  const FractionalOrder nu(1.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto u = smooth_random_field(g, 40 + seed, 20);
    const auto ux = differentiate(u);
    // -(1+u) u_x - Lambda^-2 [u, L] u_x + Lambda^-2 d/dx(u^2), every piece
    // built from the public operators.
    const auto uux = inverse_transform(dealias(forward_transform(multiply(u, ux))));
    const auto sq = inverse_transform(dealias(forward_transform(multiply(u, u))));
    const auto expect = -1.0 * (ux + uux) - lambda_pow(commutator_apply(u, ux, nu), -2.0, nu) +
                        lambda_pow(differentiate(sq), -2.0, nu);
    EXPECT_LE(max_abs_difference(rhs_quasilinear_normalized(u, nu), expect), 1e-11);
  }
}

// Expanding -A(u)u + f(u) over the common factor (1+L)^-1 gives
//   u_t = -(1+L)^-1 [u_x + L u_x - u u_x + u L u_x].
TEST(QuasiLinear, EqualsExpandedHelmholtzForm) {
  const Grid g(kTwoPi, 64);
  for (double nu_value : {1.0, 1.5, 2.0}) {
    const FractionalOrder nu(nu_value);
    const auto u = smooth_random_field(g, 7, 20);
    const auto ux = differentiate(u);
    const auto uux = inverse_transform(dealias(forward_transform(multiply(u, ux))));
    const auto lux = fractional_laplacian(ux, nu);
    const auto u_lux = inverse_transform(dealias(forward_transform(multiply(u, lux))));
    const auto expect = -1.0 * helmholtz_inverse(ux + lux - uux + u_lux, 1.0, nu);
    const auto got = rhs_quasilinear_normalized(u, nu);
    EXPECT_LE(max_abs_difference(got, expect), 1e-11 * std::max(1.0, max_abs(expect)));
  }
}

TEST(Functionals, Mass) {
  const Grid g(kTwoPi, 32);
  EXPECT_NEAR(mass(sin_k(g, 1)), 0.0, 1e-15);
  EXPECT_NEAR(mass(constant_field(g, 1.0) + cos_k(g, 1, 0.1)), kTwoPi, 1e-14);
}

TEST(Functionals, Momentum) {
  const Grid g(kTwoPi, 32);
  EXPECT_NEAR(momentum(sin_k(g, 1)), std::numbers::pi / 2.0, 1e-14);
  EXPECT_EQ(momentum(RealField(g)), 0.0);
}

TEST(Functionals, FbbmEnergy) {
  const Grid g(kTwoPi, 32);
  // (L/2) (1 + 5/4) (|c_1|^2 + |c_-1|^2) = pi * 9/4 * 1/2
  EXPECT_NEAR(fbbm_energy(sin_k(g, 1), params(ModelKind::fbbm)), 9.0 * std::numbers::pi / 8.0, 1e-14);
  EXPECT_NEAR(fbbm_energy(sin_k(g, 1), params(ModelKind::fbbm)),
              2.25 * momentum(sin_k(g, 1)), 1e-14);
  EXPECT_EQ(fbbm_energy(RealField(g), params(ModelKind::fbbm)), 0.0);
}

TEST(Models, NonFiniteInputIsBlowUp) {
  const Grid g(kTwoPi, 32);
  RealField u(g);
  u[3] = std::nan("");
  EXPECT_THROW(rhs_fch(u, params(ModelKind::fch)), BlowUpError);
}

}  // namespace
}  // namespace fracwave
