#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracwave/errors.hpp"
#include "fracwave/field.hpp"
#include "fracwave/models.hpp"
#include "fracwave/spectral.hpp"
#include "fracwave/transform.hpp"

namespace fracwave {

enum class Integrator { rk4, ifrk4 };
enum class BreakingResponse { halt, warn };

inline std::string_view to_string(Integrator i) { return i == Integrator::rk4 ? "rk4" : "ifrk4"; }

/// fKdV's dispersive phase grows without bound, so it gets the integrating
/// factor; the Helmholtz-regularized models have bounded phase speeds.
inline Integrator default_integrator(ModelKind kind) {
  return kind == ModelKind::fkdv ? Integrator::ifrk4 : Integrator::rk4;
}

struct SolverConfig {
  Integrator integrator = Integrator::rk4;
  std::optional<double> dt;  ///< fixed step; empty means recompute from the CFL rule every step
  double cfl = 0.5;
  double t_end = 1.0;
  double snapshot_every = 0.1;
  bool dealias = true;
  double breaking_slope_threshold = 100.0;
  double tail_fraction_threshold = 1e-4;
  BreakingResponse on_breaking = BreakingResponse::halt;

  void validate() const {
    if (dt && !(*dt > 0.0 && std::isfinite(*dt))) throw ParameterError("dt must be positive");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw ParameterError("cfl must lie in (0, 1]");
    if (!(t_end >= 0.0 && std::isfinite(t_end))) throw ParameterError("t_end must be >= 0");
    if (!(snapshot_every > 0.0 && std::isfinite(snapshot_every)))
      throw ParameterError("snapshot_every must be positive");
    if (!(breaking_slope_threshold > 0.0))
      throw ParameterError("breaking_slope_threshold must be positive");
    if (!(tail_fraction_threshold > 0.0 && tail_fraction_threshold < 1.0))
      throw ParameterError("tail_fraction_threshold must lie in (0, 1)");
  }
};

struct SlopeSample {
  double t;
  double min_slope;
  friend bool operator==(const SlopeSample&, const SlopeSample&) = default;
};

struct SimulationState {
  double t = 0.0;
  RealField u;
  std::uint64_t step_count = 0;
  std::vector<SlopeSample> min_slope_history;

  explicit SimulationState(RealField u0, double t0 = 0.0) : t(t0), u(std::move(u0)) {}

  friend bool operator==(const SimulationState&, const SimulationState&) = default;
};

/// A Runge-Kutta stage produced a non-finite value.
class StepBlowUpError : public BlowUpError {
 public:
  StepBlowUpError(const BlowUpError& cause, double t, int stage)
      : BlowUpError(cause.index(), "stage " + std::to_string(stage) + " at t=" +
                                       std::to_string(t) + ": " + cause.context()),
        t_(t),
        stage_(stage) {}

  double time() const { return t_; }
  int stage() const { return stage_; }

 private:
  double t_;
  int stage_;
};

namespace detail {

template <typename F>
auto stage(F&& f, double t, int index) -> decltype(f()) {
  try {
    return f();
  } catch (const StepBlowUpError&) {
    throw;
  } catch (const BlowUpError& e) {
    throw StepBlowUpError(e, t, index);
  }
}

inline void check_step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("time step must be positive");
}

}  // namespace detail

/// Classical four-stage Runge-Kutta step of du/dt = F(u). Stage 5 denotes the
/// final combination.
template <typename F>
  requires std::invocable<const F&, const RealField&>
SimulationState rk4_step(const SimulationState& s, const F& rhs, double dt) {
  detail::check_step(dt);
  const RealField& u = s.u;
  const RealField k1 = detail::stage([&] { return RealField(rhs(u)); }, s.t, 1);
  const RealField k2 = detail::stage([&] { return RealField(rhs(u + (0.5 * dt) * k1)); }, s.t, 2);
  const RealField k3 = detail::stage([&] { return RealField(rhs(u + (0.5 * dt) * k2)); }, s.t, 3);
  const RealField k4 = detail::stage([&] { return RealField(rhs(u + dt * k3)); }, s.t, 4);
  SimulationState next = s;
  RealField incr = k1 + k4;
  incr += 2.0 * (k2 + k3);
  next.u += (dt / 6.0) * incr;
  detail::stage([&] { next.u.check_finite("rk4 update"); return 0; }, s.t, 5);
  next.t = s.t + dt;
  ++next.step_count;
  return next;
}

/// Integrating-factor (Lawson) RK4: the linear part -i k c(k) is propagated
/// exactly, RK4 acts on the nonlinear remainder only.
inline SimulationState ifrk4_step(const SimulationState& s, const ModelParams& model, double dt) {
  detail::check_step(dt);
  const Grid& g = s.u.grid();
  SpectralField half(g), full(g);
  {
    SpectralField ones(g);
    for (auto& v : ones.values()) v = 1.0;
    const SpectralField rate = linear_part(ones, model);
    for (std::size_t q = 0; q < g.size(); ++q) {
      half[q] = std::exp(rate[q] * (0.5 * dt));
      full[q] = std::exp(rate[q] * dt);
    }
  }
  auto times = [](const SpectralField& e, SpectralField v) {
    for (std::size_t q = 0; q < v.size(); ++q) v[q] *= e[q];
    return v;
  };
  auto nonlinear = [&](const SpectralField& v) { return nonlinear_part(inverse_transform(v), model); };

  const SpectralField u0 = detail::stage([&] { return forward_transform(s.u); }, s.t, 1);
  const SpectralField a = detail::stage([&] { return nonlinear(u0); }, s.t, 1);
  const SpectralField b =
      detail::stage([&] { return nonlinear(times(half, u0 + (0.5 * dt) * a)); }, s.t, 2);
  const SpectralField c =
      detail::stage([&] { return nonlinear(times(half, u0) + (0.5 * dt) * b); }, s.t, 3);
  const SpectralField d =
      detail::stage([&] { return nonlinear(times(full, u0) + dt * times(half, c)); }, s.t, 4);

  SpectralField incr = times(full, a) + d;
  incr += 2.0 * times(half, b + c);
  SpectralField next_hat = times(full, u0);
  next_hat += (dt / 6.0) * incr;

  SimulationState next = s;
  next.u = detail::stage([&] { return inverse_transform(next_hat); }, s.t, 5);
  next.t = s.t + dt;
  ++next.step_count;
  return next;
}

/// CFL step cfl * dx / v_max. Under the integrating factor the linear phase
/// speeds are exact and only advection and |u| limit the step.
inline double auto_dt(const RealField& u, const ModelParams& model, Integrator integrator,
                      double cfl) {
  const Grid& g = u.grid();
  double v_max = max_abs(u);
  if (integrator == Integrator::ifrk4) {
    v_max = std::max(v_max, std::abs(model.coefficients().c_adv));
  } else {
    for (double k : g.wavenumbers()) v_max = std::max(v_max, std::abs(dispersion_speed(k, model)));
  }
  const double dx = g.spacing();
  return v_max > 0.0 ? cfl * dx / v_max : cfl * dx;
}

struct SlopeExtremum {
  double min_slope;
  double x;
};

inline SlopeExtremum min_slope(const RealField& u) {
  const RealField ux = differentiate(u);
  std::size_t at = 0;
  for (std::size_t j = 1; j < ux.size(); ++j)
    if (ux[j] < ux[at]) at = j;
  return {ux[at], u.grid().x(at)};
}

/// Energy fraction in the top octave of the retained band (and above),
/// relative to all non-mean energy.
inline double spectral_tail_fraction(const RealField& u) {
  const SpectralField c = forward_transform(u);
  const Grid& g = u.grid();
  const long top = g.dealias_cutoff();
  double tail = 0.0, total = 0.0;
  for (std::size_t q = 0; q < c.size(); ++q) {
    const long j = std::labs(g.mode_index(q));
    if (j == 0) continue;
    const double e = std::norm(c[q]);
    total += e;
    if (2 * j > top) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

struct BreakingReport {
  double t;
  double min_slope;
  double x;
  double tail_fraction;
  /// Blow-up time from a fit of 1/|min u_x| linear in t, when the fit says it
  /// lies ahead.
  std::optional<double> estimated_breaking_time;
};

/// Fits 1/|m(t)| = a + b t over the most recent negative-slope samples.
inline std::optional<double> fit_breaking_time(const std::vector<SlopeSample>& history,
                                               std::size_t window = 20) {
  std::vector<SlopeSample> pts;
  for (auto it = history.rbegin(); it != history.rend() && pts.size() < window; ++it) {
    if (!(it->min_slope < 0.0)) break;
    pts.push_back(*it);
  }
  if (pts.size() < 3) return std::nullopt;
  double st = 0, sy = 0, stt = 0, sty = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& p : pts) {
    const double y = 1.0 / std::abs(p.min_slope);
    st += p.t;
    sy += y;
    stt += p.t * p.t;
    sty += p.t * y;
  }
  const double denom = n * stt - st * st;
  if (denom <= 0.0) return std::nullopt;
  const double b = (n * sty - st * sy) / denom;
  const double a = (sy - b * st) / n;
  if (!(b < 0.0)) return std::nullopt;
  const double t_star = -a / b;
  if (!std::isfinite(t_star) || t_star < pts.front().t) return std::nullopt;
  return t_star;
}

/// Flags breaking only when the slope is steep and the steepness is
/// resolved well enough to show up in the spectral tail.
inline std::optional<BreakingReport> detect_breaking(const SimulationState& s,
                                                     const SolverConfig& config) {
  const SlopeExtremum ext = min_slope(s.u);
  if (ext.min_slope > -config.breaking_slope_threshold) return std::nullopt;
  const double tail = spectral_tail_fraction(s.u);
  if (tail <= config.tail_fraction_threshold) return std::nullopt;
  return BreakingReport{s.t, ext.min_slope, ext.x, tail, fit_breaking_time(s.min_slope_history)};
}

/// Receives (t, u) at the configured cadence, always from the simulation's
/// own thread, and never with non-finite data.
class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  virtual void on_snapshot(double t, const RealField& u) = 0;
};

class NullSink final : public SnapshotSink {
 public:
  void on_snapshot(double, const RealField&) override {}
};

class CallbackSink final : public SnapshotSink {
 public:
  explicit CallbackSink(std::function<void(double, const RealField&)> f) : f_(std::move(f)) {}
  void on_snapshot(double t, const RealField& u) override { f_(t, u); }

 private:
  std::function<void(double, const RealField&)> f_;
};

enum class Outcome { completed, breaking, blow_up };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::completed: return "completed";
    case Outcome::breaking: return "breaking";
    case Outcome::blow_up: return "blow_up";
  }
  return "?";
}

struct BlowUpInfo {
  double t;
  int stage;
  std::size_t index;
  std::string message;
};

struct IntegrationResult {
  SimulationState state;  ///< final state, or the last good one on early exit
  Outcome outcome = Outcome::completed;
  std::optional<BreakingReport> breaking;
  std::optional<BlowUpInfo> blow_up;
};

/// One step with the configured integrator.
inline SimulationState advance(const SimulationState& s, const ModelParams& model, Integrator integrator,
                               double dt) {
  if (integrator == Integrator::ifrk4) return ifrk4_step(s, model, dt);
  return rk4_step(s, [&model](const RealField& v) { return rhs(v, model); }, dt);
}

/// Steps from `initial` to config.t_end. Step sizes depend only on the
/// current state and the config, so a resumed run retraces an uninterrupted one.
inline IntegrationResult integrate(SimulationState initial, const ModelParams& model_in,
                                   const SolverConfig& config, SnapshotSink& sink) {
  config.validate();
  initial.u.check_finite("initial data");
  const ModelParams model = model_in.with_dealias(config.dealias ? Dealias::on : Dealias::off);

  IntegrationResult result{std::move(initial), Outcome::completed, std::nullopt, std::nullopt};
  SimulationState& s = result.state;
  auto record_slope = [](SimulationState& st) {
    if (st.min_slope_history.empty() || st.min_slope_history.back().t < st.t)
      st.min_slope_history.push_back({st.t, min_slope(st.u).min_slope});
  };
  record_slope(s);
  sink.on_snapshot(s.t, s.u);

  const double every = config.snapshot_every;
  // First snapshot index strictly after the current time.
  auto next_index = static_cast<std::uint64_t>(std::floor(s.t / every)) + 1;
  while (static_cast<double>(next_index) * every <= s.t) ++next_index;

  bool reported = false;
  while (s.t < config.t_end) {
    const double t_snap = static_cast<double>(next_index) * every;
    const double target = std::min(t_snap, config.t_end);
    const double nominal =
        config.dt ? *config.dt : auto_dt(s.u, model, config.integrator, config.cfl);
    const bool lands = s.t + nominal >= target - 1e-12 * std::max(1.0, std::abs(target));
    const double h = lands ? target - s.t : nominal;

    try {
      SimulationState next = advance(s, model, config.integrator, h);
      if (lands) next.t = target;
      s = std::move(next);
    } catch (const StepBlowUpError& e) {
      result.outcome = Outcome::blow_up;
      result.blow_up = BlowUpInfo{e.time(), e.stage(), e.index(), e.what()};
      return result;
    }
    record_slope(s);

    if (!reported) {
      if (auto report = detect_breaking(s, config)) {
        result.breaking = report;
        reported = true;
        if (config.on_breaking == BreakingResponse::halt) {
          result.outcome = Outcome::breaking;
          sink.on_snapshot(s.t, s.u);
          return result;
        }
      }
    }

    const bool at_end = s.t >= config.t_end;
    if (lands && target == t_snap) ++next_index;
    if ((lands && target == t_snap) || at_end) sink.on_snapshot(s.t, s.u);
  }
  return result;
}

inline IntegrationResult integrate(const RealField& u0, const ModelParams& model,
                                   const SolverConfig& config, SnapshotSink& sink) {
  return integrate(SimulationState(u0), model, config, sink);
}

}  // namespace fracwave
