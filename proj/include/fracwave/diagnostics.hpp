#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fracwave/operators.hpp"
#include "fracwave/timestepper.hpp"

namespace fracwave {

struct SampleSpec {
  Grid grid;
  std::size_t n_samples = 200;
  long band_limit = 20;
  double amplitude = 1.0;
  std::uint64_t seed = 0;

  explicit SampleSpec(Grid g, std::size_t n = 200, long band = 20, double amp = 1.0,
                      std::uint64_t s = 0)
      : grid(std::move(g)), n_samples(n), band_limit(band), amplitude(amp), seed(s) {}

  void validate() const {
    if (n_samples == 0) throw ParameterError("n_samples must be positive");
    if (band_limit < 1 || band_limit > static_cast<long>(grid.dealias_cutoff()))
      throw ParameterError("band_limit must lie in [1, " + std::to_string(grid.dealias_cutoff()) +
                           "] for N = " + std::to_string(grid.size()));
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
      throw ParameterError("amplitude must be positive");
  }
};

struct DiagnosticsReport {
  std::string estimate;
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<double> ratios;
  std::size_t skipped = 0;   // zero denominators
  std::size_t censored = 0;  // trajectories that broke or blew up
  double sup_ratio = 0.0;
  double mean_ratio = 0.0;
  std::optional<SampleSpec> spec;

  void finalize() {
    sup_ratio = 0.0;
    double acc = 0.0;
    for (double r : ratios) {
      sup_ratio = std::max(sup_ratio, r);
      acc += r;
    }
    mean_ratio = ratios.empty() ? 0.0 : acc / static_cast<double>(ratios.size());
  }

  bool all_finite() const {
    return std::all_of(ratios.begin(), ratios.end(),
                       [](double r) { return std::isfinite(r) && r >= 0.0; });
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Engine for sample `index`, stream `stream` of a run seeded with `seed`.
inline std::mt19937_64 sample_engine(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(splitmix64(index)),
                    static_cast<std::uint32_t>(splitmix64(index) >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

/// Evaluates f(0..n-1) on up to `threads` workers; results are ordered by index.
template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, unsigned threads, F f) {
  std::vector<T> out(n);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) out[i] = f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

/// Real field whose modes 1..band carry amplitude |j|^-2 and uniform random
/// phases; the mean is uniform in [-1, 1].
inline RealField random_band_limited(const Grid& grid, long band, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SpectralField c(grid);
  c[grid.position(0)] = unit(rng);
  for (long j = 1; j <= band; ++j) {
    const Complex z = std::polar(1.0 / static_cast<double>(j * j), phase(rng));
    c[grid.position(j)] = z;
    c[grid.position(-j)] = std::conj(z);
  }
  return inverse_transform(c);
}

inline RealField scaled_to_norm(RealField u, double s, double norm) {
  const double current = sobolev_norm(u, s);
  if (current > 0.0) u *= norm / current;
  return u;
}

// ---------------------------------------------------------------------------
// Commutator estimate ||[Lambda^m, f] g||_s <= C ||f||_sigma ||g||_{s+m-1}

inline void validate_commutator_hypothesis(double m, double s, double sigma) {
  if (!(m > 0.0)) throw ParameterError("hypothesis violated: m > 0 (got m = " + detail::fmt(m) + ")");
  if (!(s >= 0.0)) throw ParameterError("hypothesis violated: s >= 0 (got s = " + detail::fmt(s) + ")");
  if (!(s + m > 1.5))
    throw ParameterError("hypothesis violated: 3/2 < s + m (got s + m = " + detail::fmt(s + m) + ")");
  if (!(s + m <= sigma))
    throw ParameterError("hypothesis violated: s + m <= sigma (got s + m = " + detail::fmt(s + m) +
                         ", sigma = " + detail::fmt(sigma) + ")");
}

/// [Lambda^m, f] g = Lambda^m (f g) - f Lambda^m g.
inline SpectralField lambda_commutator(const RealField& f, const RealField& g, double m,
                                       FractionalOrder nu) {
  using spectral_ops::lambda_pow;
  using spectral_ops::product;
  const RealField lg = inverse_transform(lambda_pow(forward_transform(g), m, nu));
  SpectralField out = lambda_pow(product(f, g, Dealias::on), m, nu);
  out -= product(f, lg, Dealias::on);
  return out;
}

/// Single ratio; nullopt when the denominator vanishes.
inline std::optional<double> commutator_ratio(const RealField& f, const RealField& g, double m,
                                              double s, double sigma, FractionalOrder nu) {
  const double den = sobolev_norm(f, sigma) * sobolev_norm(g, s + m - 1.0);
  if (den == 0.0) return std::nullopt;
  return sobolev_norm(lambda_commutator(f, g, m, nu), s) / den;
}

inline DiagnosticsReport commutator_estimate_sample(double m, double s, double sigma,
                                                    FractionalOrder nu, const SampleSpec& spec,
                                                    unsigned threads = 1) {
  validate_commutator_hypothesis(m, s, sigma);
  spec.validate();
  const auto ratios = detail::parallel_map<std::optional<double>>(
      spec.n_samples, threads, [&](std::size_t i) {
        auto rng = detail::sample_engine(spec.seed, i, 0);
        const RealField f = spec.amplitude * random_band_limited(spec.grid, spec.band_limit, rng);
        const RealField g = random_band_limited(spec.grid, spec.band_limit, rng);
        return commutator_ratio(f, g, m, s, sigma, nu);
      });
  DiagnosticsReport r;
  r.estimate = "commutator";
  r.parameters = {{"m", m}, {"s", s}, {"sigma", sigma}, {"nu", nu.value()}};
  for (const auto& x : ratios) {
    if (x) r.ratios.push_back(*x);
    else ++r.skipped;
  }
  r.spec = spec;
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Lipschitz and boundedness constants of the quasi-linear structure

enum class KatoEstimate { a_lip, b_bound, b_lip, f_lip_x, f_lip_y };

inline std::string_view to_string(KatoEstimate e) {
  switch (e) {
    case KatoEstimate::a_lip: return "A_LIP";
    case KatoEstimate::b_bound: return "B_BOUND";
    case KatoEstimate::b_lip: return "B_LIP";
    case KatoEstimate::f_lip_x: return "F_LIP_X";
    case KatoEstimate::f_lip_y: return "F_LIP_Y";
  }
  return "?";
}

inline std::optional<KatoEstimate> parse_kato_estimate(std::string_view s) {
  for (auto e : {KatoEstimate::a_lip, KatoEstimate::b_bound, KatoEstimate::b_lip,
                 KatoEstimate::f_lip_x, KatoEstimate::f_lip_y})
    if (to_string(e) == s) return e;
  return std::nullopt;
}

inline void validate_kato_index(double s, FractionalOrder nu) {
  if (!(s > 2.0 * nu.value() + 0.5))
    throw ParameterError("index violated: s > 2 nu + 1/2 (got s = " + detail::fmt(s) +
                         ", 2 nu + 1/2 = " + detail::fmt(2.0 * nu.value() + 0.5) + ")");
}

/// Single ratio for the chosen estimate. `z` is the test vector (ignored by
/// the f estimates). nullopt when the denominator vanishes.
inline std::optional<double> kato_ratio(KatoEstimate which, const RealField& u, const RealField& v,
                                        const RealField& z, double s, FractionalOrder nu) {
  const RealField d = u - v;
  switch (which) {
    case KatoEstimate::a_lip: {
      const double den = sobolev_norm(d, s - 1.0) * sobolev_norm(z, s);
      if (den == 0.0) return std::nullopt;
      return sobolev_norm(apply_A(u, z, nu) - apply_A(v, z, nu), s - 1.0) / den;
    }
    case KatoEstimate::b_bound: {
      const double den = sobolev_norm(z, s - 1.0);
      if (den == 0.0) return std::nullopt;
      return sobolev_norm(apply_B(u, z, nu), s - 1.0) / den;
    }
    case KatoEstimate::b_lip: {
      const double den = sobolev_norm(d, s) * sobolev_norm(z, s - 1.0);
      if (den == 0.0) return std::nullopt;
      return sobolev_norm(apply_B(u, z, nu) - apply_B(v, z, nu), s - 1.0) / den;
    }
    case KatoEstimate::f_lip_x:
    case KatoEstimate::f_lip_y: {
      const double idx = which == KatoEstimate::f_lip_x ? s - 1.0 : s;
      const double den = sobolev_norm(d, idx);
      if (den == 0.0) return std::nullopt;
      return sobolev_norm(apply_f(u, nu) - apply_f(v, nu), idx) / den;
    }
  }
  return std::nullopt;
}

/// u and v are drawn inside the H^s ball of radius spec.amplitude; the test
/// vector has unit norm.
inline DiagnosticsReport kato_lipschitz_sample(KatoEstimate which, double s, FractionalOrder nu,
                                               const SampleSpec& spec, unsigned threads = 1) {
  validate_kato_index(s, nu);
  spec.validate();
  const double radius = spec.amplitude;
  const auto ratios = detail::parallel_map<std::optional<double>>(
      spec.n_samples, threads, [&](std::size_t i) {
        auto rng = detail::sample_engine(spec.seed, i, 1);
        std::uniform_real_distribution<double> frac(0.0, 1.0);
        auto in_ball = [&] {
          RealField w = random_band_limited(spec.grid, spec.band_limit, rng);
          return scaled_to_norm(std::move(w), s, radius * (1.0 - frac(rng)));
        };
        const RealField u = in_ball();
        const RealField v = in_ball();
        const RealField z = scaled_to_norm(random_band_limited(spec.grid, spec.band_limit, rng), s, 1.0);
        return kato_ratio(which, u, v, z, s, nu);
      });
  DiagnosticsReport r;
  r.estimate = std::string(to_string(which));
  r.parameters = {{"s", s}, {"nu", nu.value()}, {"radius", radius}};
  for (const auto& x : ratios) {
    if (x) r.ratios.push_back(*x);
    else ++r.skipped;
  }
  r.spec = spec;
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Continuous dependence on initial data

enum class PerturbationKind { random, constant };

struct DependenceSetup {
  double delta = 1e-3;
  std::size_t n_pairs = 10;
  double s = 2.6;
  double t_end = 1.0;
  long band_limit = 10;
  std::uint64_t seed = 0;
  PerturbationKind perturbation = PerturbationKind::random;
};

struct PairOutcome {
  double growth = 0.0;  // G
  bool censored = false;
};

/// G = sup_t ||u1(t) - u2(t)||_{s-1} / ||u1(0) - u2(0)||_{s-1} for one pair,
/// with u1(0) = u0 and u2(0) = u0 + delta p. Both runs share one fixed step.
inline PairOutcome dependence_pair(const RealField& u0, const RealField& p, double delta,
                                   const ModelParams& model_in, const SolverConfig& config,
                                   double s, double t_end) {
  const ModelParams model = model_in.with_dealias(config.dealias ? Dealias::on : Dealias::off);
  SimulationState a(u0), b(u0 + delta * p);
  const double d0 = sobolev_norm(a.u - b.u, s - 1.0);
  if (d0 == 0.0) throw ParameterError("perturbation has zero norm");
  const double dt = config.dt ? *config.dt
                              : std::min(auto_dt(a.u, model, config.integrator, config.cfl),
                                         auto_dt(b.u, model, config.integrator, config.cfl));
  const auto steps = static_cast<std::uint64_t>(std::ceil(t_end / dt - 1e-12));
  PairOutcome out{1.0, false};
  for (std::uint64_t n = 0; n < steps; ++n) {
    const double h = n + 1 == steps ? t_end - a.t : dt;
    try {
      a = advance(a, model, config.integrator, h);
      b = advance(b, model, config.integrator, h);
    } catch (const BlowUpError&) {
      out.censored = true;
      return out;
    }
    for (SimulationState* st : {&a, &b}) st->min_slope_history.push_back({st->t, min_slope(st->u).min_slope});
    if (detect_breaking(a, config) || detect_breaking(b, config)) {
      out.censored = true;
      return out;
    }
    out.growth = std::max(out.growth, sobolev_norm(a.u - b.u, s - 1.0) / d0);
  }
  return out;
}

inline DiagnosticsReport continuous_dependence_experiment(const RealField& u0,
                                                          const ModelParams& model,
                                                          const SolverConfig& config,
                                                          const DependenceSetup& setup,
                                                          unsigned threads = 1) {
  if (!(setup.delta > 0.0)) throw ParameterError("perturbation scale must be positive");
  if (setup.n_pairs == 0) throw ParameterError("n_pairs must be positive");
  if (!(setup.t_end > 0.0)) throw ParameterError("experiment time must be positive");
  config.validate();
  const Grid& g = u0.grid();
  if (setup.perturbation == PerturbationKind::random &&
      (setup.band_limit < 1 || setup.band_limit > static_cast<long>(g.dealias_cutoff())))
    throw ParameterError("band_limit out of range");

  const auto pairs = detail::parallel_map<PairOutcome>(setup.n_pairs, threads, [&](std::size_t i) {
    RealField p = constant_field(g, 1.0);
    if (setup.perturbation == PerturbationKind::random) {
      auto rng = detail::sample_engine(setup.seed, i, 2);
      p = random_band_limited(g, setup.band_limit, rng);
    }
    p = scaled_to_norm(std::move(p), setup.s - 1.0, 1.0);
    return dependence_pair(u0, p, setup.delta, model, config, setup.s, setup.t_end);
  });

  DiagnosticsReport r;
  r.estimate = "dependence";
  r.parameters = {{"delta", setup.delta}, {"s", setup.s}, {"t_end", setup.t_end},
                  {"nu", model.nu().value()}};
  for (const auto& p : pairs) {
    if (p.censored) ++r.censored;
    else r.ratios.push_back(p.growth);
  }
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Convergence studies

enum class ConvergenceKind { spatial, temporal, box_size };

inline std::string_view to_string(ConvergenceKind k) {
  switch (k) {
    case ConvergenceKind::spatial: return "SPATIAL";
    case ConvergenceKind::temporal: return "TEMPORAL";
    case ConvergenceKind::box_size: return "BOX_SIZE";
  }
  return "?";
}

inline std::optional<ConvergenceKind> parse_convergence_kind(std::string_view s) {
  for (auto k : {ConvergenceKind::spatial, ConvergenceKind::temporal, ConvergenceKind::box_size})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct ConvergenceRow {
  double resolution;  // N, dt or L depending on the study
  double error;
};

struct ConvergenceTable {
  ConvergenceKind kind;
  std::vector<ConvergenceRow> rows;
  std::optional<double> fitted_order;  // temporal only
};

namespace detail {

inline RealField run_to_end(const RealField& u0, const ModelParams& model, const SolverConfig& config,
                            const char* what) {
  NullSink sink;
  auto r = integrate(u0, model, config, sink);
  if (r.outcome != Outcome::completed)
    throw Error(std::string(what) + " run did not complete: " + std::string(to_string(r.outcome)));
  return std::move(r.state.u);
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Max error at shared grid points against a run at n_reference, which must
/// be a multiple of every entry of `sizes`.
inline ConvergenceTable spatial_convergence(const ModelParams& model, const SolverConfig& config,
                                            double length, const std::function<double(double)>& u0,
                                            const std::vector<std::size_t>& sizes,
                                            std::size_t n_reference) {
  const Grid ref_grid(length, n_reference);
  const RealField ref = detail::run_to_end(sample(ref_grid, u0), model, config, "reference");
  ConvergenceTable t{ConvergenceKind::spatial, {}, std::nullopt};
  for (std::size_t n : sizes) {
    if (n_reference % n != 0) throw ParameterError("reference size must be a multiple of every N");
    const Grid g(length, n);
    const RealField u = detail::run_to_end(sample(g, u0), model, config, "spatial");
    const std::size_t stride = n_reference / n;
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) err = std::max(err, std::abs(u[j] - ref[j * stride]));
    t.rows.push_back({static_cast<double>(n), err});
  }
  return t;
}

/// Richardson study: dt0 halved `halvings` times; row i holds the difference
/// between the runs at dt_i and dt_{i+1}. The fitted order is the log-log slope.
inline ConvergenceTable temporal_convergence(const ModelParams& model, SolverConfig config,
                                             const RealField& u0, double dt0, int halvings) {
  if (halvings < 2) throw ParameterError("temporal study needs at least two halvings");
  std::vector<RealField> runs;
  std::vector<double> dts;
  for (int i = 0; i <= halvings; ++i) {
    dts.push_back(dt0 / std::ldexp(1.0, i));
    config.dt = dts.back();
    runs.push_back(detail::run_to_end(u0, model, config, "temporal"));
  }
  ConvergenceTable t{ConvergenceKind::temporal, {}, std::nullopt};
  std::vector<double> x, y;
  for (int i = 0; i < halvings; ++i) {
    const double e = max_abs_difference(runs[static_cast<std::size_t>(i)], runs[static_cast<std::size_t>(i) + 1]);
    t.rows.push_back({dts[static_cast<std::size_t>(i)], e});
    x.push_back(dts[static_cast<std::size_t>(i)]);
    y.push_back(e);
  }
  t.fitted_order = detail::log_log_slope(x, y);
  return t;
}

struct GaussianBump {
  double width = 1.0;
  double amplitude = 0.5;
};

/// Bump centred in each box [0, L); boxes share the spacing dx. Error is the
/// max difference over the small box against the same offsets in the reference box.
inline ConvergenceTable box_size_convergence(const ModelParams& model, const SolverConfig& config,
                                             double dx, GaussianBump bump,
                                             const std::vector<double>& lengths,
                                             double reference_length) {
  auto make = [&](double length) {
    const auto n = static_cast<std::size_t>(std::llround(length / dx));
    const Grid g(length, n);
    const double c = length / 2.0;
    return sample(g, [&](double x) {
      const double r = (x - c) / bump.width;
      return bump.amplitude * std::exp(-r * r);
    });
  };
  const RealField ref = detail::run_to_end(make(reference_length), model, config, "reference");
  const std::size_t ref_mid = ref.size() / 2;
  ConvergenceTable t{ConvergenceKind::box_size, {}, std::nullopt};
  for (double length : lengths) {
    const RealField u = detail::run_to_end(make(length), model, config, "box");
    const std::size_t mid = u.size() / 2;
    double err = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) err = std::max(err, std::abs(u[j] - ref[ref_mid - mid + j]));
    t.rows.push_back({length, err});
  }
  return t;
}

}  // namespace fracwave
