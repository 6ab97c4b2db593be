#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracwave/app.hpp"

namespace fracwave {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fracwave_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  Result run(const std::string& args) {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + FRACWAVE_CLI_PATH + "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json manifest(const std::string& sub) { return json::parse(slurp(dir_ / sub / "manifest.json")); }

  void write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
  }

  fs::path dir_;
};

TEST_F(Cli, ZeroDataRun) {
  const auto r = run("run --set output.directory=z solver.t_end=1 grid.N=32");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = manifest("z");
  EXPECT_EQ(m["outcome"], "completed");
  EXPECT_EQ(m["code_version"], FRACWAVE_VERSION);
  EXPECT_EQ(m["config"]["grid"]["N"], 32);
  ASSERT_EQ(m["snapshots"].size(), 11u);
  for (const auto& s : m["snapshots"]) {
    std::istringstream in(slurp(dir_ / "z" / s["file"].get<std::string>()));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x,u");
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      EXPECT_EQ(line.substr(line.find(',') + 1), "0");
    }
    EXPECT_EQ(rows, 32);
  }
  EXPECT_DOUBLE_EQ(m["snapshots"].back()["t"].get<double>(), 1.0);
}

TEST_F(Cli, ModePhaseSpeed) {
  const auto r = run("run --set output.directory=d initial.kind=mode initial.amplitude=1e-6 grid.N=64 solver.t_end=2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ps = manifest("d")["phase_speed"];
  EXPECT_NEAR(ps["measured"].get<double>(), 7.0 / 9.0, 1e-6);
  EXPECT_NEAR(ps["predicted"].get<double>(), 7.0 / 9.0, 1e-15);
}

TEST_F(Cli, BreakingExitsTwo) {
  const auto r = run("run --set output.directory=b initial.kind=mode initial.amplitude=2 grid.N=256 "
                     "solver.t_end=3 solver.breaking_slope_threshold=10");
  EXPECT_EQ(r.code, 2) << r.err;
  const auto m = manifest("b");
  EXPECT_EQ(m["outcome"], "breaking");
  EXPECT_EQ(m["exit_code"], 2);
  const auto& b = m["breaking"];
  EXPECT_LE(b["min_slope"].get<double>(), -10.0);
  EXPECT_GT(b["tail_fraction"].get<double>(), 1e-4);
  EXPECT_TRUE(b["x"].is_number());
  EXPECT_EQ(m["last_good_time"], b["t"]);
  EXPECT_TRUE(fs::exists(dir_ / "b" / "checkpoint.fwck"));
}

TEST_F(Cli, BlowUpExitsThree) {
  const auto r = run("run --set output.directory=u model.kind=fkdv solver.integrator=rk4 solver.dt=5 "
                     "solver.t_end=1000 solver.snapshot_every=1000 solver.breaking_slope_threshold=1e300 "
                     "initial.kind=mode initial.k=20 initial.amplitude=0.1 grid.N=64");
  EXPECT_EQ(r.code, 3) << r.err;
  const auto m = manifest("u");
  EXPECT_EQ(m["outcome"], "blow_up");
  EXPECT_TRUE(m["blow_up"].is_object());
  EXPECT_EQ(m["last_good_time"], m["blow_up"]["t"]);
}

TEST_F(Cli, ConfigErrors) {
  auto r = run("run --set model.bogus=1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("model.bogus"), std::string::npos) << r.err;

  write("bad.json", "{\n  \"grid\": {\"N\": 64,}\n}\n");
  r = run("run --config bad.json");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.json:2:"), std::string::npos) << r.err;

  r = run("run --set grid.N=30 output.directory=x");
  EXPECT_EQ(r.code, 0) << r.err;  // even N >= 8 is fine
  r = run("run --set grid.N=31");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("grid.N"), std::string::npos);

  r = run("run --set initial.kind=wave");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("initial.kind"), std::string::npos);

  r = run("bogus");
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, LowNuNeedsFlag) {
  auto r = run("run --set model.nu=0.75 grid.N=32 output.directory=lo");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--allow-low-nu"), std::string::npos);
  r = run("run --allow-low-nu --set model.nu=0.75 grid.N=32 output.directory=lo");
  EXPECT_EQ(r.code, 0) << r.err;
  r = run("run --allow-low-nu --set model.nu=0.4 grid.N=32");
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, SnapshotRoundTripsAsInitialData) {
  ASSERT_EQ(run("run --set output.directory=a initial.kind=gaussian initial.center=3 grid.N=64 solver.t_end=0.5").code, 0);
  const auto last = manifest("a")["snapshots"].back()["file"].get<std::string>();
  const auto r = run("run --set output.directory=b initial.kind=file initial.path=a/" + last +
                     " grid.N=64 solver.t_end=0");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "a" / last), slurp(dir_ / "b" / "snapshot_00000.csv"));

  EXPECT_EQ(run("run --set initial.kind=file initial.path=a/" + last + " grid.N=32").code, 1);
}

TEST_F(Cli, NuSweep) {
  const auto r = run("sweep --axis nu --values 1,1.5,2,1.5 --jobs 2 --set output.directory=s "
                     "initial.kind=mode initial.amplitude=1e-8 grid.N=32 solver.t_end=1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("duplicate"), std::string::npos);
  const auto summary = json::parse(slurp(dir_ / "s" / "sweep" / "summary.json"));
  ASSERT_EQ(summary["points"].size(), 3u);
  const char* names[] = {"nu=1", "nu=1.5", "nu=2"};
  for (int i = 0; i < 3; ++i) {
    const auto& p = summary["points"][static_cast<std::size_t>(i)];
    EXPECT_EQ(p["directory"], names[i]);
    EXPECT_EQ(p["exit_code"], 0);
    const double nu = p["value"];
    const double predicted = dispersion_speed(1.0, ModelParams::defaults(ModelKind::fch, nu));
    EXPECT_NEAR(p["phase_speed"]["measured"].get<double>(), predicted, 1e-6);
    EXPECT_TRUE(fs::exists(dir_ / "s" / "sweep" / names[i] / "manifest.json"));
  }
}

TEST_F(Cli, EmptySweepIsUsageError) {
  EXPECT_EQ(run("sweep --axis nu").code, 1);
  EXPECT_EQ(run("sweep --axis width --values 1").code, 1);
}

TEST_F(Cli, DiagnoseCommutatorDefault) {
  const auto r = run("diagnose commutator --set output.directory=dg");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = json::parse(slurp(dir_ / "dg" / "diagnose_commutator.json"));
  EXPECT_EQ(rep["ratios"].size(), 200u);
  EXPECT_TRUE(rep["sup_ratio"].is_number());
  EXPECT_TRUE(rep["mean_ratio"].is_number());
  EXPECT_TRUE(rep["refinement"]["stable"].get<bool>());
}

TEST_F(Cli, DiagnoseHypothesisViolation) {
  const auto r = run("diagnose commutator --set diagnostics.s=0.25 diagnostics.m=1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("3/2 < s + m"), std::string::npos) << r.err;
  EXPECT_EQ(run("diagnose lipschitz --set diagnostics.s=2.5").code, 1);
  EXPECT_EQ(run("diagnose nonsense").code, 1);
}

TEST_F(Cli, DiagnoseDependenceOnEquilibrium) {
  const auto r = run("diagnose dependence --set output.directory=dd initial.kind=constant initial.value=0.5 "
                     "grid.N=32 diagnostics.perturbation=constant diagnostics.n_pairs=2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = json::parse(slurp(dir_ / "dd" / "diagnose_dependence.json"));
  ASSERT_EQ(rep["reports"].size(), 3u);
  for (const auto& d : rep["reports"])
    for (const auto& g : d["ratios"]) EXPECT_EQ(g.get<double>(), 1.0);
}

TEST_F(Cli, DiagnoseLipschitzAndConvergence) {
  EXPECT_EQ(run("diagnose lipschitz --set output.directory=dl diagnostics.n_samples=20 diagnostics.N=64 "
                "diagnostics.band_limit=10").code,
            0);
  const auto rep = json::parse(slurp(dir_ / "dl" / "diagnose_lipschitz.json"));
  EXPECT_EQ(rep["reports"].size(), 5u);
  const auto r = run("diagnose convergence --set output.directory=dc model.kind=fbbm initial.kind=mode "
                     "initial.amplitude=0.3 grid.N=32 solver.t_end=1 diagnostics.kind=TEMPORAL");
  EXPECT_EQ(r.code, 0) << r.err;
  const auto c = json::parse(slurp(dir_ / "dc" / "diagnose_convergence.json"));
  EXPECT_NEAR(c["fitted_order"].get<double>(), 4.0, 0.3);
}

const char* kResumeBase = "--set grid.N=64 initial.kind=mode initial.amplitude=0.3 solver.dt=0.01 "
                          "solver.snapshot_every=0.5";

TEST_F(Cli, ResumeFromStartMatchesFreshRun) {
  ASSERT_EQ(run(std::string("run ") + kResumeBase + " output.directory=c0 solver.t_end=0").code, 0);
  ASSERT_EQ(run(std::string("run ") + kResumeBase + " output.directory=fresh solver.t_end=1").code, 0);
  const auto r = run("resume c0/checkpoint.fwck --set output.directory=res solver.t_end=1");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"snapshot_00000.csv", "snapshot_00001.csv", "snapshot_00002.csv"})
    EXPECT_EQ(slurp(dir_ / "fresh" / f), slurp(dir_ / "res" / f)) << f;
}

TEST_F(Cli, SplitRunMatchesStraightRun) {
  ASSERT_EQ(run(std::string("run ") + kResumeBase + " output.directory=straight solver.t_end=2").code, 0);
  ASSERT_EQ(run(std::string("run ") + kResumeBase + " output.directory=first solver.t_end=1").code, 0);
  ASSERT_EQ(run("resume first/checkpoint.fwck --set output.directory=second solver.t_end=2").code, 0);
  const auto a = manifest("straight")["snapshots"].back()["file"].get<std::string>();
  const auto b = manifest("second")["snapshots"].back()["file"].get<std::string>();
  EXPECT_EQ(slurp(dir_ / "straight" / a), slurp(dir_ / "second" / b));
  EXPECT_EQ(checkpoint_read(dir_ / "straight" / "checkpoint.fwck"),
            checkpoint_read(dir_ / "second" / "checkpoint.fwck"));
}

TEST_F(Cli, CorruptCheckpoint) {
  ASSERT_EQ(run(std::string("run ") + kResumeBase + " output.directory=c solver.t_end=0.1").code, 0);
  auto bytes = slurp(dir_ / "c" / "checkpoint.fwck");
  bytes[40] = static_cast<char>(bytes[40] ^ 1);
  write("bad.fwck", bytes);
  const auto r = run("resume bad.fwck");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("checksum"), std::string::npos) << r.err;
  EXPECT_EQ(run("resume missing.fwck").code, 1);
}

TEST_F(Cli, ManifestWrittenOnFailure) {
  const auto r = run("run --set output.directory=f initial.kind=file initial.path=nope.csv grid.N=32");
  EXPECT_EQ(r.code, 1);
  const auto m = manifest("f");
  EXPECT_EQ(m["outcome"], "error");
  EXPECT_NE(m["error"].get<std::string>().find("nope.csv"), std::string::npos);
}

// In-process checks of the config layer.

TEST(Config, OverridesCreateNestedObjects) {
  json j = default_config_json();
  apply_override(j, "model.coefficients.c_mix=0.5");
  apply_override(j, "output.directory=some/where");
  apply_override(j, "solver.dt=0.25");
  EXPECT_EQ(j["model"]["coefficients"]["c_mix"], 0.5);
  EXPECT_EQ(j["output"]["directory"], "some/where");
  const auto cfg = parse_run_config(j, false);
  EXPECT_EQ(cfg.coefficients->c_mix, 0.5);
  EXPECT_EQ(cfg.coefficients->c_evo, 1.25);
  EXPECT_EQ(*cfg.solver.dt, 0.25);
  EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
}

TEST(Config, StrictModelRules) {
  json j = default_config_json();
  apply_override(j, "model.kind=fkdv");
  apply_override(j, "model.coefficients.c_evo=1");
  EXPECT_THROW(parse_run_config(j, false), ConfigError);
  j = default_config_json();
  apply_override(j, "solver.cfl=2");
  try {
    parse_run_config(j, false);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "solver");
  }
}

TEST(Config, SnapshotCsvRoundTrip) {
  const Grid g(3.7, 16);
  const auto u = sample(g, [](double x) { return std::exp(std::sin(x)) / 3.0; });
  const auto path = fs::temp_directory_path() / "fracwave_roundtrip.csv";
  write_snapshot_csv(path, u);
  EXPECT_EQ(read_snapshot_csv(path, g), u);
}

}  // namespace
}  // namespace fracwave
