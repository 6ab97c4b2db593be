#pragma once

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include "fracwave/checkpoint.hpp"
#include "fracwave/config.hpp"
#include "fracwave/diagnostics.hpp"

#ifndef FRACWAVE_VERSION
#define FRACWAVE_VERSION "unknown"
#endif

namespace fracwave::app {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kUsage = 1, kBreaking = 2, kBlowUp = 3 };

struct CommandOptions {
  std::optional<std::string> config;
  std::vector<std::string> sets;
  unsigned jobs = 1;
  bool allow_low_nu = false;
};

/// Config document: defaults, then the file, then --set overrides.
inline json assemble_config(const CommandOptions& opts, json base = default_config_json()) {
  if (opts.config) merge_into(base, load_config_file(*opts.config));
  for (const auto& s : opts.sets) apply_override(base, s);
  return base;
}

inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// run / resume

namespace detail {

/// Least-squares slope of y against t.
inline double slope(const std::vector<double>& t, const std::vector<double>& y) {
  const auto n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

inline json drift_json(const std::vector<double>& q) {
  if (q.empty()) return nullptr;
  double d = 0.0;
  for (double v : q) d = std::max(d, std::abs(v - q.front()));
  return {{"initial", q.front()},
          {"max_abs_drift", d},
          {"max_rel_drift", q.front() != 0.0 ? json(d / std::abs(q.front())) : json(nullptr)}};
}

class RunRecorder final : public SnapshotSink {
 public:
  RunRecorder(fs::path dir, ModelParams model, std::optional<long> tracked_mode)
      : dir_(std::move(dir)), model_(std::move(model)), mode_(tracked_mode) {}

  void on_snapshot(double t, const RealField& u) override {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%05zu.csv", files_.size());
    write_snapshot_csv(dir_ / name, u);
    files_.push_back({{"t", t}, {"file", name}});
    times_.push_back(t);
    mass_.push_back(mass(u));
    momentum_.push_back(momentum(u));
    energy_.push_back(fbbm_energy(u, model_));
    if (mode_) phase_.push_back(std::arg(forward_transform(u)[u.grid().position(*mode_)]));
  }

  json snapshots() const { return files_; }

  json conserved() const {
    return {{"t", times_},
            {"mass", mass_},
            {"momentum", momentum_},
            {"fbbm_energy", energy_},
            {"drift",
             {{"mass", drift_json(mass_)},
              {"momentum", drift_json(momentum_)},
              {"fbbm_energy", drift_json(energy_)}}}};
  }

  /// Phase speed of the tracked mode from the unwrapped phase history.
  json phase_speed(double length) const {
    if (!mode_ || *mode_ == 0) return nullptr;
    const double k = 2.0 * std::numbers::pi * static_cast<double>(*mode_) / length;
    json j = {{"mode", *mode_}, {"wavenumber", k}, {"predicted", dispersion_speed(k, model_)}};
    if (times_.size() < 2 || times_.back() == times_.front()) {
      j["measured"] = nullptr;
      return j;
    }
    std::vector<double> un(phase_);
    for (std::size_t i = 1; i < un.size(); ++i) {
      double d = phase_[i] - phase_[i - 1];
      d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
      un[i] = un[i - 1] + d;
    }
    j["measured"] = -slope(times_, un) / k;
    return j;
  }

 private:
  fs::path dir_;
  ModelParams model_;
  std::optional<long> mode_;
  json files_ = json::array();
  std::vector<double> times_, mass_, momentum_, energy_, phase_;
};

inline json breaking_json(const std::optional<BreakingReport>& b) {
  if (!b) return nullptr;
  return {{"t", b->t},
          {"min_slope", b->min_slope},
          {"x", b->x},
          {"tail_fraction", b->tail_fraction},
          {"estimated_breaking_time",
           b->estimated_breaking_time ? json(*b->estimated_breaking_time) : json(nullptr)}};
}

}  // namespace detail

struct RunArtifacts {
  int exit_code = kSuccess;
  json manifest;
  fs::path directory;
};

/// Runs one simulation into cfg.output.directory. `start` replaces the
/// initial data when resuming.
inline RunArtifacts execute_run(const RunConfig& cfg, const json& echo,
                                std::optional<SimulationState> start, std::ostream& log) {
  RunArtifacts art;
  art.directory = cfg.output.directory;
  fs::create_directories(art.directory);
  json& m = art.manifest;
  m = {{"code_version", FRACWAVE_VERSION}, {"config", echo}};

  auto finish = [&](int code, std::string_view outcome) {
    art.exit_code = code;
    m["outcome"] = outcome;
    m["exit_code"] = code;
    if (cfg.output.manifest) write_json(art.directory / "manifest.json", m);
    return art;
  };

  try {
    const ModelParams model = cfg.model();
    SimulationState s = start ? std::move(*start) : SimulationState(build_initial(cfg));
    if (s.u.grid() != cfg.grid()) throw ConfigError("grid", "does not match the checkpoint grid");
    if (cfg.solver.t_end < s.t)
      throw ConfigError("solver.t_end", "is before the checkpoint time " + shortest(s.t));
    m["t_start"] = s.t;

    std::optional<long> mode;
    if (cfg.initial.kind == InitialKind::mode) mode = cfg.initial.k;
    detail::RunRecorder rec(art.directory, model, mode);
    const auto r = integrate(std::move(s), model, cfg.solver, rec);

    m["last_good_time"] = r.state.t;
    m["step_count"] = r.state.step_count;
    m["snapshots"] = rec.snapshots();
    m["conserved"] = rec.conserved();
    m["phase_speed"] = rec.phase_speed(cfg.length);
    m["breaking"] = detail::breaking_json(r.breaking);
    m["blow_up"] = r.blow_up ? json{{"t", r.blow_up->t},
                                    {"stage", r.blow_up->stage},
                                    {"index", r.blow_up->index},
                                    {"message", r.blow_up->message}}
                             : json(nullptr);
    m["checkpoint"] = nullptr;
    if (cfg.output.checkpoint) {
      checkpoint_write(r.state, art.directory / "checkpoint.fwck", echo.dump());
      m["checkpoint"] = "checkpoint.fwck";
    }

    if (r.breaking && r.outcome != Outcome::breaking)
      log << "warning: breaking detected at t = " << r.breaking->t << " (continuing)\n";
    switch (r.outcome) {
      case Outcome::completed: return finish(kSuccess, "completed");
      case Outcome::breaking:
        log << "breaking at t = " << r.breaking->t << ", min slope " << r.breaking->min_slope << '\n';
        return finish(kBreaking, "breaking");
      case Outcome::blow_up:
        log << "blow-up after t = " << r.state.t << ": " << r.blow_up->message << '\n';
        return finish(kBlowUp, "blow_up");
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    m["error"] = e.what();
    return finish(kUsage, "error");
  }
  return art;
}

inline int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  json doc;
  RunConfig cfg;
  try {
    doc = assemble_config(opts);
    cfg = parse_run_config(doc, opts.allow_low_nu);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  }
  const auto art = execute_run(cfg, doc, std::nullopt, err);
  out << art.manifest.value("outcome", "") << " -> " << art.directory.string() << '\n';
  return art.exit_code;
}

inline int cmd_resume(const std::string& checkpoint_path, const CommandOptions& opts, std::ostream& out,
                      std::ostream& err) {
  Checkpoint ck{SimulationState(RealField(Grid(1.0, 8))), {}};
  try {
    ck = checkpoint_read_full(checkpoint_path);
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kUsage;
  }
  json doc;
  RunConfig cfg;
  try {
    json base = default_config_json();
    if (!ck.metadata.empty()) merge_into(base, parse_config_text(ck.metadata, checkpoint_path));
    doc = assemble_config(opts, std::move(base));
    cfg = parse_run_config(doc, opts.allow_low_nu);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  }
  const auto art = execute_run(cfg, doc, std::move(ck.state), err);
  out << art.manifest.value("outcome", "") << " -> " << art.directory.string() << '\n';
  return art.exit_code;
}

// ---------------------------------------------------------------------------
// sweep

enum class SweepAxis { nu, amplitude };

inline int cmd_sweep(const std::string& axis_name, const std::vector<double>& raw_values,
                     const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  SweepAxis axis;
  if (axis_name == "nu") axis = SweepAxis::nu;
  else if (axis_name == "amplitude") axis = SweepAxis::amplitude;
  else {
    err << "usage error: sweep axis must be nu or amplitude\n";
    return kUsage;
  }
  if (raw_values.empty()) {
    err << "usage error: empty sweep list\n";
    return kUsage;
  }
  std::vector<double> values;
  for (double v : raw_values) {
    if (std::find(values.begin(), values.end(), v) != values.end()) {
      err << "warning: duplicate sweep value " << shortest(v) << " ignored\n";
      continue;
    }
    values.push_back(v);
  }

  struct Point {
    double value;
    std::string name;
    json doc;
    RunConfig cfg;
  };
  std::vector<Point> points;
  fs::path root;
  try {
    const json base = assemble_config(opts);
    root = fs::path(parse_run_config(base, opts.allow_low_nu).output.directory) / "sweep";
    for (double v : values) {
      Point p{v, axis_name + "=" + shortest(v), base, {}};
      if (axis == SweepAxis::nu) {
        p.doc["model"]["nu"] = v;
      } else {
        const std::string kind = p.doc["initial"].value("kind", "zero");
        if (kind != "mode" && kind != "gaussian")
          throw ConfigError("initial.kind", "amplitude sweep needs mode or gaussian data");
        p.doc["initial"]["amplitude"] = v;
      }
      p.doc["output"]["directory"] = (root / p.name).string();
      p.cfg = parse_run_config(p.doc, opts.allow_low_nu);
      points.push_back(std::move(p));
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  }

  std::vector<RunArtifacts> results(points.size());
  std::vector<std::string> logs(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      std::ostringstream log;
      results[i] = execute_run(points[i].cfg, points[i].doc, std::nullopt, log);
      logs[i] = log.str();
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(points.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < jobs; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json summary = {{"axis", axis_name}, {"points", json::array()}};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const json& m = results[i].manifest;
    json row = {{"value", points[i].value},
                {"directory", points[i].name},
                {"exit_code", results[i].exit_code},
                {"outcome", m.value("outcome", "error")}};
    row["drift"] = m.contains("conserved") ? m["conserved"]["drift"] : json(nullptr);
    row["phase_speed"] = m.value("phase_speed", json(nullptr));
    if (m.contains("error")) row["error"] = m["error"];
    summary["points"].push_back(row);
    err << logs[i];
    out << points[i].name << ": " << row["outcome"].get<std::string>() << '\n';
  }
  write_json(root / "summary.json", summary);
  return kSuccess;
}

// ---------------------------------------------------------------------------
// diagnose

namespace detail {

inline json spec_json(const SampleSpec& s) {
  return {{"N", s.grid.size()},
          {"L", s.grid.length()},
          {"n_samples", s.n_samples},
          {"band_limit", s.band_limit},
          {"amplitude", s.amplitude},
          {"seed", s.seed}};
}

inline json report_json(const DiagnosticsReport& r) {
  json params = json::object();
  for (const auto& [k, v] : r.parameters) params[k] = v;
  return {{"estimate", r.estimate},
          {"parameters", params},
          {"ratios", r.ratios},
          {"sup_ratio", r.sup_ratio},
          {"mean_ratio", r.mean_ratio},
          {"skipped", r.skipped},
          {"censored", r.censored},
          {"spec", r.spec ? spec_json(*r.spec) : json(nullptr)}};
}

inline double spread(double a, double b) {
  if (a == 0.0 && b == 0.0) return 1.0;
  return std::max(a, b) / std::min(a, b);
}

inline SampleSpec read_sample_spec(const ConfigReader& r, const char* amplitude_key) {
  const long n = r.integer("N", 128);
  if (n < 8 || n % 2) throw ConfigError(r.key("N"), "must be even and at least 8");
  const long samples = r.integer("n_samples", 200);
  if (samples < 1) throw ConfigError(r.key("n_samples"), "must be positive");
  SampleSpec spec(Grid(r.number("L", 2.0 * std::numbers::pi), static_cast<std::size_t>(n)),
                  static_cast<std::size_t>(samples), r.integer("band_limit", 20),
                  r.number(amplitude_key, 1.0), static_cast<std::uint64_t>(r.integer("seed", 0)));
  try {
    spec.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(r.key("band_limit"), e.what());
  }
  return spec;
}

/// Refined specs: N doubled, then the sample count doubled.
inline std::pair<SampleSpec, SampleSpec> refinements(const SampleSpec& s) {
  SampleSpec fine(Grid(s.grid.length(), 2 * s.grid.size()), s.n_samples, s.band_limit, s.amplitude, s.seed);
  SampleSpec more(s.grid, 2 * s.n_samples, s.band_limit, s.amplitude, s.seed);
  return {fine, more};
}

template <typename Sampler>
json sampled_with_refinement(Sampler run, const SampleSpec& spec, bool refine, bool& ok) {
  const DiagnosticsReport base = run(spec);
  json j = report_json(base);
  ok = ok && base.all_finite() && !base.ratios.empty();
  if (refine) {
    const auto [fine, more] = refinements(spec);
    const DiagnosticsReport a = run(fine), b = run(more);
    const double sa = spread(base.sup_ratio, a.sup_ratio), sb = spread(base.sup_ratio, b.sup_ratio);
    j["refinement"] = {{"N_doubled_sup_ratio", a.sup_ratio},
                       {"samples_doubled_sup_ratio", b.sup_ratio},
                       {"N_change_factor", sa},
                       {"samples_change_factor", sb},
                       {"stable", sa < 2.0 && sb < 2.0}};
    ok = ok && a.all_finite() && b.all_finite() && sa < 2.0 && sb < 2.0;
  }
  return j;
}

inline std::vector<double> number_list(const ConfigReader& r, const std::string& k, std::vector<double> fallback) {
  if (!r.has(k)) return fallback;
  const json& v = r.raw(k);
  if (!v.is_array() || v.empty()) throw ConfigError(r.key(k), "expected a non-empty list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(r.key(k), "expected a non-empty list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

/// Returns the report and whether every standing property held.
inline std::pair<json, bool> run_diagnostic(const std::string& kind, const json& doc, bool allow_low_nu,
                                            unsigned threads) {
  json run_doc = doc;
  json diag = json::object();
  if (run_doc.contains("diagnostics")) {
    diag = run_doc["diagnostics"];
    run_doc.erase("diagnostics");
  }
  const RunConfig cfg = parse_run_config(run_doc, allow_low_nu);
  const ModelParams model = cfg.model();
  const FractionalOrder nu = model.nu();
  const ConfigReader r(diag, "diagnostics");
  bool ok = true;
  json report;

  if (kind == "commutator") {
    r.only({"m", "s", "sigma", "N", "L", "n_samples", "band_limit", "amplitude", "seed", "refine"});
    const double m = r.number("m", 1.0), s = r.number("s", 2.0), sigma = r.number("sigma", 3.0);
    validate_commutator_hypothesis(m, s, sigma);
    const SampleSpec spec = detail::read_sample_spec(r, "amplitude");
    report = detail::sampled_with_refinement(
        [&](const SampleSpec& sp) { return commutator_estimate_sample(m, s, sigma, nu, sp, threads); }, spec,
        r.boolean("refine", true), ok);
  } else if (kind == "lipschitz") {
    r.only({"estimate", "s", "N", "L", "n_samples", "band_limit", "radius", "seed", "refine"});
    const double s = r.number("s", 2.0 * nu.value() + 0.6);
    validate_kato_index(s, nu);
    const std::string which = r.string("estimate", "all");
    std::vector<KatoEstimate> list;
    if (which == "all") {
      list = {KatoEstimate::a_lip, KatoEstimate::b_bound, KatoEstimate::b_lip, KatoEstimate::f_lip_x,
              KatoEstimate::f_lip_y};
    } else if (auto e = parse_kato_estimate(which)) {
      list = {*e};
    } else {
      throw ConfigError(r.key("estimate"), "expected A_LIP, B_BOUND, B_LIP, F_LIP_X, F_LIP_Y or all");
    }
    const SampleSpec spec = detail::read_sample_spec(r, "radius");
    report = {{"estimate", "lipschitz"}, {"reports", json::array()}};
    for (auto e : list)
      report["reports"].push_back(detail::sampled_with_refinement(
          [&](const SampleSpec& sp) { return kato_lipschitz_sample(e, s, nu, sp, threads); }, spec,
          r.boolean("refine", true), ok));
  } else if (kind == "dependence") {
    r.only({"deltas", "n_pairs", "s", "t_end", "band_limit", "seed", "perturbation"});
    DependenceSetup setup;
    setup.n_pairs = static_cast<std::size_t>(std::max(1L, r.integer("n_pairs", 10)));
    setup.s = r.number("s", 2.0 * nu.value() + 0.6);
    setup.t_end = r.number("t_end", 1.0);
    setup.band_limit = r.integer("band_limit", 10);
    setup.seed = static_cast<std::uint64_t>(r.integer("seed", 0));
    const std::string pk = r.string("perturbation", "random");
    if (pk == "constant") setup.perturbation = PerturbationKind::constant;
    else if (pk != "random") throw ConfigError(r.key("perturbation"), "expected random or constant");
    const RealField u0 = build_initial(cfg);
    report = {{"estimate", "dependence"}, {"reports", json::array()}};
    std::vector<double> sups;
    for (double delta : detail::number_list(r, "deltas", {1e-2, 1e-3, 1e-4})) {
      setup.delta = delta;
      const auto rep = continuous_dependence_experiment(u0, model, cfg.solver, setup, threads);
      report["reports"].push_back(detail::report_json(rep));
      ok = ok && rep.all_finite();
      if (!rep.ratios.empty()) sups.push_back(rep.sup_ratio);
    }
    double spread = 1.0;
    if (!sups.empty())
      spread = *std::max_element(sups.begin(), sups.end()) / *std::min_element(sups.begin(), sups.end());
    report["max_G"] = sups;
    report["max_G_spread"] = spread;
    ok = ok && spread < 2.0;
  } else if (kind == "convergence") {
    r.only({"kind", "sizes", "reference_N", "dt0", "halvings", "lengths", "reference_L", "dx", "width",
            "amplitude"});
    const std::string ck = r.string("kind", "SPATIAL");
    const auto parsed = parse_convergence_kind(ck);
    if (!parsed) throw ConfigError(r.key("kind"), "expected SPATIAL, TEMPORAL or BOX_SIZE");
    ConvergenceTable t{*parsed, {}, std::nullopt};
    if (*parsed == ConvergenceKind::spatial) {
      std::vector<std::size_t> sizes;
      for (double v : detail::number_list(r, "sizes", {16, 32, 64})) sizes.push_back(static_cast<std::size_t>(v));
      t = spatial_convergence(model, cfg.solver, cfg.length, cfg.initial.profile(cfg.length), sizes,
                              static_cast<std::size_t>(r.integer("reference_N", 256)));
    } else if (*parsed == ConvergenceKind::temporal) {
      t = temporal_convergence(model, cfg.solver, build_initial(cfg), r.number("dt0", 0.1),
                               static_cast<int>(r.integer("halvings", 3)));
    } else {
      const double two_pi = 2.0 * std::numbers::pi;
      t = box_size_convergence(model, cfg.solver, r.number("dx", two_pi / 32.0),
                               GaussianBump{r.number("width", 1.0), r.number("amplitude", 0.5)},
                               detail::number_list(r, "lengths", {two_pi, 2 * two_pi, 4 * two_pi}),
                               r.number("reference_L", 8 * two_pi));
    }
    report = {{"estimate", "convergence"}, {"kind", ck}, {"rows", json::array()}};
    for (const auto& row : t.rows) {
      report["rows"].push_back({{"resolution", row.resolution}, {"error", row.error}});
      ok = ok && std::isfinite(row.error);
    }
    report["fitted_order"] = t.fitted_order ? json(*t.fitted_order) : json(nullptr);
    if (t.fitted_order) ok = ok && std::isfinite(*t.fitted_order);
  } else {
    throw ConfigError("", "unknown diagnostic '" + kind + "' (commutator, lipschitz, dependence, convergence)");
  }
  report["nu"] = nu.value();
  report["ok"] = ok;
  return {report, ok};
}

inline int cmd_diagnose(const std::string& kind, const CommandOptions& opts, std::ostream& out,
                        std::ostream& err) {
  try {
    const json doc = assemble_config(opts);
    const auto [report, ok] = run_diagnostic(kind, doc, opts.allow_low_nu, opts.jobs);
    json run_doc = doc;
    run_doc.erase("diagnostics");
    const fs::path dir = parse_run_config(run_doc, opts.allow_low_nu).output.directory;
    fs::create_directories(dir);
    const fs::path path = dir / ("diagnose_" + kind + ".json");
    write_json(path, report);
    out << kind << ": " << (ok ? "ok" : "FAILED") << " -> " << path.string() << '\n';
    return ok ? kSuccess : kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  }
  return kUsage;
}

}  // namespace fracwave::app
