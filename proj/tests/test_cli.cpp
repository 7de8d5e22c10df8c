#include <doctest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tailslab/pipeline.hpp"

using namespace tailslab;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tailslab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Cmd {
  int code;
  std::string out;
};

Cmd run_cli(const std::string& args) {
  const std::string cmd = std::string(TAILSLAB_CLI) + " " + args + " 2>&1";
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, f)) out += buf;
  const int st = pclose(f);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

const char* kSmallCubic = R"(
name = small_cubic
[grid]
n = 200
[evolution]
t_final = 200
probes = 1, 5
[nonlinearity]
p = 3
amplitude = 1
[fit]
window = 20:200
)";

const char* kLinear = R"(
name = small_linear
[grid]
n = 200
[evolution]
t_final = 60
probes = 1, 5
[fit]
window = 10:60
)";

}  // namespace

TEST_CASE("malformed config names the key and the line") {
  const std::string text = "name = x\n[grid]\nn = 400\nbogus = 3\n";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "grid.bogus");
    CHECK(e.line == 4);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  try {
    parse_config("[grid]\n\ncfl = fast\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "grid.cfl");
    CHECK(e.line == 3);
  }
  CHECK_THROWS_AS(parse_config("[nowhere]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nn = 400\nn = 800\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[fit]\nwindow = 100:200\n"), ConfigError);  // t_b/t_a < 5
  CHECK_THROWS_AS(parse_config("[nonlinearity]\np = 1\n"), ConfigError);
}

TEST_CASE("canonical text round trips") {
  const RunConfig a = parse_config(kSmallCubic);
  const RunConfig b = parse_config(a.to_text());
  CHECK(a.to_text() == b.to_text());
  CHECK(b.grid.n == 200);
  CHECK(b.spec.power == 3);
  CHECK(b.spec.coeff.amplitude == 1.0);
  CHECK(b.fit.t_a == 20.0);
  CHECK(b.key_lines.at("grid.n") > 0);
}

TEST_CASE("overrides and sweep arguments") {
  const RunConfig a = parse_config(kSmallCubic);
  const RunConfig b = with_override(a, "grid.n", "300");
  CHECK(b.grid.n == 300);
  CHECK(a.grid.n == 200);
  CHECK_THROWS_AS(with_override(a, "grid.nope", "1"), ConfigError);
  const auto [key, values] = parse_sweep("nonlinearity.amplitude=0.5,1,2");
  CHECK(key == "nonlinearity.amplitude");
  REQUIRE(values.size() == 3);
  CHECK(values[2] == "2");
  CHECK_THROWS(parse_sweep("no-equals"));
}

TEST_CASE("output root resolution") {
  CHECK(output_root(fs::path("/x/y")) == fs::path("/x/y"));
  setenv("TAILSLAB_OUT", "/tmp/from_env", 1);
  CHECK(output_root(fs::path("/x/y")) == fs::path("/tmp/from_env"));
  unsetenv("TAILSLAB_OUT");
  CHECK(output_root() == fs::path("runs"));
}

TEST_CASE("linear flat pipeline reports no tail; stored CSVs regenerate the report") {
  const fs::path root = scratch("linear");
  const auto rep = run_pipeline(parse_config(kLinear), root);
  CHECK(rep.status == "no-tail");
  CHECK(rep.exit_code() == 0);
  const fs::path dir = root / "small_linear";
  const auto man = RunManifest::load(dir);
  for (const char* s : {"simulate", "radiation", "coeffs", "fit", "report"})
    CHECK(man.stages.at(s) == "ok");
  for (const char* f : {"radiation.csv", "radiation_nodal.csv", "coefficients.txt", "fits.csv",
                        "report.txt", "report.csv"})
    CHECK(man.files.count(f) == 1);

  const std::string txt = slurp(dir / "report.txt"), csv = slurp(dir / "report.csv");
  stage_report(dir);
  CHECK(slurp(dir / "report.txt") == txt);
  CHECK(slurp(dir / "report.csv") == csv);
  const auto cli = run_cli("report --run " + dir.string());
  CHECK(cli.code == 0);
  CHECK(slurp(dir / "report.txt") == txt);
}

TEST_CASE("identical configs give byte-identical CSV outputs") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_pipeline(parse_config(kLinear), a);
  run_pipeline(parse_config(kLinear), b);
  for (const char* f : {"radiation.csv", "radiation_nodal.csv", "coefficients.csv", "fits.csv",
                        "report.csv"})
    CHECK(slurp(a / "small_linear" / f) == slurp(b / "small_linear" / f));
}

TEST_CASE("cubic run: stage subcommands, cutoffs, re-derivation, missing artifacts") {
  const fs::path root = scratch("cubic");
  const fs::path cfg = root / "small_cubic.ini";
  std::ofstream(cfg) << kSmallCubic;
  const auto sim = run_cli("simulate --config " + cfg.string() + " --out " + root.string());
  REQUIRE(sim.code == 0);
  const fs::path dir = root / "small_cubic";
  CHECK(run_cli("radiation --run " + dir.string()).code == 0);

  const auto co = run_cli("coeffs --run " + dir.string() + " --cutoff 0.5:1 --cutoff 2:4");
  CHECK(co.code == 0);
  CHECK(co.out.find("cutoff 0.5:1") != std::string::npos);
  CHECK(co.out.find("cutoff 2:4") != std::string::npos);
  CHECK(co.out.find("relative difference") != std::string::npos);
  const auto kv = read_kv_file(dir / "coefficients.txt");
  CHECK(std::stod(kv.at("cutoff_relative_difference")) < 0.01);
  CHECK(std::stod(kv.at("coefficient")) != 0.0);

  CHECK(run_cli("coeffs --run " + dir.string()).code == 0);
  CHECK(run_cli("fit --run " + dir.string()).code == 0);
  const auto first = run_cli("report --run " + dir.string());
  CHECK((first.code == 0 || first.code == 1));
  const std::string report = slurp(dir / "report.txt");

  // delete intermediates, re-derive from the trajectory, same report
  for (const char* f : {"radiation.csv", "radiation_nodal.csv", "radiation_direct.csv",
                        "radiation.txt", "coefficients.txt", "coefficients.csv", "fits.csv",
                        "measurements.txt", "report.txt", "report.csv"})
    fs::remove(dir / f);
  stage_radiation(dir);
  stage_coeffs(dir);
  stage_fit(dir);
  stage_report(dir);
  CHECK(slurp(dir / "report.txt") == report);

  // a missing upstream artifact is a stage error recorded in the manifest
  fs::remove(dir / "radiation_nodal.csv");
  CHECK_THROWS_AS(stage_coeffs(dir), StageError);
  CHECK(RunManifest::load(dir).stages.at("coeffs").rfind("error", 0) == 0);
  const auto miss = run_cli("fit --run " + dir.string());
  CHECK(miss.code == 3);

  // a modified artifact is detected by its digest
  stage_radiation(dir);
  std::ofstream(dir / "radiation_nodal.csv", std::ios::app) << "tampered\n";
  CHECK_THROWS_AS(stage_coeffs(dir), StageError);
}

TEST_CASE("kernels subcommand prints the kernel table") {
  const fs::path out = scratch("kernels");
  const auto k = run_cli("kernels --k 1 2 3 --t 40 --out " + out.string());
  CHECK(k.code == 0);
  CHECK(k.out.find("umod_log_coefficient") != std::string::npos);
  CHECK(k.out.find("bode_max_error") != std::string::npos);
  CHECK(fs::exists(out / "kernels.csv"));
  CHECK(slurp(out / "kernels.txt") == k.out);
  CHECK(run_cli("kernels --k 0 --t 40").code == 3);
}

TEST_CASE("CLI exit codes for bad input") {
  const fs::path root = scratch("bad");
  const fs::path cfg = root / "bad.ini";
  std::ofstream(cfg) << "[grid]\nn = 400\nwhat = 1\n";
  const auto r = run_cli("run --config " + cfg.string() + " --out " + root.string());
  CHECK(r.code == 2);
  CHECK(r.out.find("grid.what") != std::string::npos);
  CHECK(r.out.find("line 3") != std::string::npos);
  CHECK(run_cli("report --run " + (root / "nothing").string()).code == 3);
}

TEST_CASE("blowup is reported as outside the small-data hypothesis") {
  RunConfig cfg = parse_config(kLinear);
  cfg = with_override(cfg, "nonlinearity.amplitude", "1");
  cfg = with_override(cfg, "data.bump0_amplitude", "30");
  cfg = with_override(cfg, "name", "blowup");
  const fs::path root = scratch("blowup");
  const auto rep = run_pipeline(cfg, root);
  CHECK(rep.status == "out-of-hypothesis");
  CHECK(rep.exit_code() == 4);
  const auto man = RunManifest::load(root / "blowup");
  CHECK(man.stages.at("simulate").find("blowup") != std::string::npos);
  CHECK(fs::exists(root / "blowup" / "trajectory"));
}

TEST_CASE("sweep runs one pipeline per value") {
  const fs::path root = scratch("sweep");
  const auto reps = run_sweep(parse_config(kLinear), "grid.n", {"100", "200"}, 2, root);
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].name != reps[1].name);
  for (const auto& r : reps) CHECK(r.status == "no-tail");
}
