#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracwave/timestepper.hpp"

namespace fracwave {

using json = nlohmann::json;

/// Bad configuration; `key` is the dotted path of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& msg)
      : Error(key.empty() ? msg : key + ": " + msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class InitialKind { zero, constant, mode, gaussian, file };

struct InitialSpec {
  InitialKind kind = InitialKind::zero;
  double value = 0.0;      // constant
  long k = 1;              // mode index
  double amplitude = 1.0;  // mode, gaussian
  double phase = 0.0;      // mode
  double center = 0.0;     // gaussian
  double width = 1.0;      // gaussian
  std::string path;        // file

  /// Profile as a function of x; not available for file data.
  std::function<double(double)> profile(double length) const {
    switch (kind) {
      case InitialKind::zero: return [](double) { return 0.0; };
      case InitialKind::constant: return [v = value](double) { return v; };
      case InitialKind::mode: {
        const double kk = 2.0 * std::numbers::pi * static_cast<double>(k) / length;
        return [=, a = amplitude, ph = phase](double x) { return a * std::sin(kk * x + ph); };
      }
      case InitialKind::gaussian:
        return [a = amplitude, c = center, w = width](double x) {
          const double r = (x - c) / w;
          return a * std::exp(-r * r);
        };
      case InitialKind::file: break;
    }
    throw ConfigError("initial.kind", "file data has no closed-form profile");
  }
};

struct OutputSpec {
  std::string directory = "out";
  std::string snapshot_format = "csv";
  bool manifest = true;
  bool checkpoint = true;
};

struct RunConfig {
  ModelKind model_kind = ModelKind::fch;
  double nu = 1.0;
  std::optional<Coefficients> coefficients;
  double length = 2.0 * std::numbers::pi;
  std::size_t n_points = 256;
  InitialSpec initial;
  SolverConfig solver;
  OutputSpec output;
  bool allow_low_nu = false;

  Grid grid() const { return Grid(length, n_points); }
  ModelParams model() const {
    const FractionalOrder order(nu, allow_low_nu ? OrderCheck::relaxed : OrderCheck::strict);
    const Coefficients c = coefficients ? *coefficients : default_coefficients(model_kind);
    return ModelParams(model_kind, order, c, solver.dealias ? Dealias::on : Dealias::off);
  }
};

// ---------------------------------------------------------------------------
// JSON handling

inline json default_config_json() {
  return json{
      {"model", {{"kind", "fch"}, {"nu", 1.0}}},
      {"grid", {{"L", 2.0 * std::numbers::pi}, {"N", 256}}},
      {"initial", {{"kind", "zero"}}},
      {"solver",
       {{"integrator", "auto"},
        {"dt", "auto"},
        {"cfl", 0.5},
        {"t_end", 1.0},
        {"snapshot_every", 0.1},
        {"dealias", true},
        {"breaking_slope_threshold", 100.0},
        {"tail_fraction_threshold", 1e-4},
        {"on_breaking", "halt"}}},
      {"output",
       {{"directory", "out"}, {"snapshot_format", "csv"}, {"manifest", true}, {"checkpoint", true}}},
  };
}

namespace detail {

inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("", origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                              ": invalid JSON");
  }
}

inline json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

/// Recursive merge: objects merge key by key, everything else replaces.
inline void merge_into(json& base, const json& patch) {
  if (!base.is_object() || !patch.is_object()) {
    base = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (base.contains(it.key())) merge_into(base[it.key()], it.value());
    else base[it.key()] = it.value();
  }
}

/// Applies "a.b.c=value". The value is read as JSON when it parses, else as a string.
inline void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("", "override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component");
    if (!node->is_object()) throw ConfigError(key, "is not inside an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

class ConfigReader {
 public:
  ConfigReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }

  void only(std::initializer_list<const char*> allowed) const {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
  }

  ConfigReader object(const std::string& k) const {
    if (!has(k)) return ConfigReader(empty(), key(k));
    return ConfigReader(j_.at(k), key(k));
  }

  double number(const std::string& k, double fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(key(k), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(key(k), "must be finite");
    return d;
  }

  long integer(const std::string& k, long fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (v.is_number_integer()) return v.get<long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long>(d);
    }
    throw ConfigError(key(k), "expected an integer");
  }

  bool boolean(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_boolean()) throw ConfigError(key(k), "expected true or false");
    return j_.at(k).get<bool>();
  }

  std::string string(const std::string& k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_string()) throw ConfigError(key(k), "expected a string");
    return j_.at(k).get<std::string>();
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  const json& j_;
  std::string path_;
};

namespace detail {

inline InitialSpec parse_initial(const ConfigReader& r) {
  InitialSpec s;
  const std::string kind = r.string("kind", "zero");
  if (kind == "zero") {
    r.only({"kind"});
    s.kind = InitialKind::zero;
  } else if (kind == "constant") {
    r.only({"kind", "value"});
    s.kind = InitialKind::constant;
    s.value = r.number("value", 0.0);
  } else if (kind == "mode") {
    r.only({"kind", "k", "amplitude", "phase"});
    s.kind = InitialKind::mode;
    s.k = r.integer("k", 1);
    s.amplitude = r.number("amplitude", 1.0);
    s.phase = r.number("phase", 0.0);
  } else if (kind == "gaussian") {
    r.only({"kind", "center", "width", "amplitude"});
    s.kind = InitialKind::gaussian;
    s.center = r.number("center", 0.0);
    s.width = r.number("width", 1.0);
    s.amplitude = r.number("amplitude", 1.0);
    if (!(s.width > 0.0)) throw ConfigError(r.key("width"), "must be positive");
  } else if (kind == "file") {
    r.only({"kind", "path"});
    s.kind = InitialKind::file;
    s.path = r.string("path", "");
    if (s.path.empty()) throw ConfigError(r.key("path"), "required for file data");
  } else {
    throw ConfigError(r.key("kind"), "unknown initial kind '" + kind + "'");
  }
  return s;
}

inline SolverConfig parse_solver(const ConfigReader& r, ModelKind kind) {
  r.only({"integrator", "dt", "cfl", "t_end", "snapshot_every", "dealias", "breaking_slope_threshold",
          "tail_fraction_threshold", "on_breaking"});
  SolverConfig s;
  const std::string integ = r.string("integrator", "auto");
  if (integ == "auto") s.integrator = default_integrator(kind);
  else if (integ == "rk4") s.integrator = Integrator::rk4;
  else if (integ == "ifrk4") s.integrator = Integrator::ifrk4;
  else throw ConfigError(r.key("integrator"), "expected rk4, ifrk4 or auto");

  if (r.has("dt") && r.raw("dt").is_string()) {
    if (r.raw("dt") != "auto") throw ConfigError(r.key("dt"), "expected a number or \"auto\"");
  } else if (r.has("dt")) {
    s.dt = r.number("dt", 0.0);
  }
  s.cfl = r.number("cfl", s.cfl);
  s.t_end = r.number("t_end", s.t_end);
  s.snapshot_every = r.number("snapshot_every", s.snapshot_every);
  s.dealias = r.boolean("dealias", s.dealias);
  s.breaking_slope_threshold = r.number("breaking_slope_threshold", s.breaking_slope_threshold);
  s.tail_fraction_threshold = r.number("tail_fraction_threshold", s.tail_fraction_threshold);
  const std::string ob = r.string("on_breaking", "halt");
  if (ob == "halt") s.on_breaking = BreakingResponse::halt;
  else if (ob == "warn") s.on_breaking = BreakingResponse::warn;
  else throw ConfigError(r.key("on_breaking"), "expected halt or warn");
  try {
    s.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("solver", e.what());
  }
  return s;
}

}  // namespace detail

/// Validates the whole document before anything is allocated.
inline RunConfig parse_run_config(const json& j, bool allow_low_nu, bool allow_extra_sections = false) {
  ConfigReader root(j, "");
  if (!allow_extra_sections) root.only({"model", "grid", "initial", "solver", "output"});
  RunConfig c;
  c.allow_low_nu = allow_low_nu;

  const auto model = root.object("model");
  model.only({"kind", "nu", "coefficients"});
  const std::string kind = model.string("kind", "fch");
  const auto parsed = parse_model_kind(kind);
  if (!parsed) throw ConfigError(model.key("kind"), "unknown model '" + kind + "'");
  c.model_kind = *parsed;
  c.nu = model.number("nu", 1.0);
  if (c.nu < 1.0 && !allow_low_nu)
    throw ConfigError(model.key("nu"), "nu >= 1 required (pass --allow-low-nu to go down to 0.5)");
  if (!(c.nu >= 0.5)) throw ConfigError(model.key("nu"), "nu >= 0.5 required");
  if (model.has("coefficients")) {
    const auto cr = model.object("coefficients");
    cr.only({"c_adv", "c_nl", "c_disp", "c_evo", "c_mix"});
    Coefficients co = default_coefficients(c.model_kind);
    co.c_adv = cr.number("c_adv", co.c_adv);
    co.c_nl = cr.number("c_nl", co.c_nl);
    co.c_disp = cr.number("c_disp", co.c_disp);
    co.c_evo = cr.number("c_evo", co.c_evo);
    co.c_mix = cr.number("c_mix", co.c_mix);
    c.coefficients = co;
  }

  const auto grid = root.object("grid");
  grid.only({"L", "N"});
  c.length = grid.number("L", c.length);
  const long n = grid.integer("N", static_cast<long>(c.n_points));
  if (n < 8 || n % 2 != 0) throw ConfigError(grid.key("N"), "must be even and at least 8");
  if (!(c.length > 0.0)) throw ConfigError(grid.key("L"), "must be positive");
  c.n_points = static_cast<std::size_t>(n);

  c.initial = detail::parse_initial(root.object("initial"));
  c.solver = detail::parse_solver(root.object("solver"), c.model_kind);

  const auto out = root.object("output");
  out.only({"directory", "snapshot_format", "manifest", "checkpoint"});
  c.output.directory = out.string("directory", c.output.directory);
  c.output.snapshot_format = out.string("snapshot_format", "csv");
  if (c.output.snapshot_format != "csv") throw ConfigError(out.key("snapshot_format"), "only csv is supported");
  c.output.manifest = out.boolean("manifest", true);
  c.output.checkpoint = out.boolean("checkpoint", true);

  try {
    (void)c.model();
  } catch (const ParameterError& e) {
    throw ConfigError("model", e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Snapshot CSV

inline std::string format_snapshot_csv(const RealField& u) {
  std::string out = "x,u\n";
  char buf[64];
  for (std::size_t j = 0; j < u.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", u.grid().x(j), u[j]);
    out += buf;
  }
  return out;
}

inline void write_snapshot_csv(const std::filesystem::path& path, const RealField& u) {
  std::ofstream out(path, std::ios::binary);
  out << format_snapshot_csv(u);
  if (!out) throw Error("cannot write " + path.string());
}

/// Reads a snapshot written for `grid`; the x column must match the grid.
inline RealField read_snapshot_csv(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("initial.path", "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,u")
    throw ConfigError("initial.path", path.string() + ": expected header 'x,u'");
  std::vector<double> xs, us;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    char* end = nullptr;
    const double x = std::strtod(line.c_str(), &end);
    const bool ok_x = comma != std::string::npos && end == line.c_str() + comma;
    const double u = ok_x ? std::strtod(line.c_str() + comma + 1, &end) : 0.0;
    if (!ok_x || *end != '\0')
      throw ConfigError("initial.path", path.string() + ":" + std::to_string(row) + ": malformed row");
    xs.push_back(x);
    us.push_back(u);
  }
  if (us.size() != grid.size())
    throw ConfigError("initial.path", path.string() + ": has " + std::to_string(us.size()) +
                                          " rows but N = " + std::to_string(grid.size()));
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (std::abs(xs[j] - grid.x(j)) > 1e-12 * grid.length())
      throw ConfigError("initial.path", path.string() + ": x column does not match the grid");
  return RealField(grid, std::move(us));
}

inline RealField build_initial(const RunConfig& c) {
  const Grid g = c.grid();
  if (c.initial.kind == InitialKind::file) return read_snapshot_csv(c.initial.path, g);
  return sample(g, c.initial.profile(c.length));
}

}  // namespace fracwave
