// tailslab command line: full runs, sweeps and the individual pipeline stages.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <iostream>

#include "tailslab/pipeline.hpp"

using namespace tailslab;

namespace {

void print_report(const AsymptoticReport& r) {
  std::cout << r.to_text();
  std::cout << fmt::format("status: {} (exit {})\n", r.status, r.exit_code());
}

int worst_exit(const std::vector<AsymptoticReport>& reps) {
  int code = 0;
  for (const auto& r : reps) code = std::max(code, r.exit_code());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tailslab: late-time tails of semilinear waves on hyperboloidal slices"};
  app.require_subcommand(1);
  bool seedless = true;
  app.add_flag("--seedless", seedless, "Deterministic pipeline (always on; reserved)");

  std::string config_path, run_dir, out_dir, sweep;
  int jobs = 1;
  std::vector<std::string> cutoffs;
  std::vector<int> ks{1, 2, 3};
  double kt = 40;

  auto* run = app.add_subcommand("run", "Run every stage for a config (or a sweep)");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output root (TAILSLAB_OUT overrides)");
  run->add_option("--sweep", sweep, "section.key=v1,v2,... runs one pipeline per value");
  run->add_option("--jobs", jobs, "Concurrent runs in sweep mode")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "Evolve and store the trajectory");
  sim->add_option("--config", config_path, "Config file (creates the run directory)");
  sim->add_option("--run", run_dir, "Existing run directory");
  sim->add_option("--out", out_dir, "Output root (TAILSLAB_OUT overrides)");

  auto* rad = app.add_subcommand("radiation", "Radiation fields at scri");
  rad->add_option("--run", run_dir, "Run directory")->required();

  auto* co = app.add_subcommand("coeffs", "Tail coefficients");
  co->add_option("--run", run_dir, "Run directory")->required();
  co->add_option("--cutoff", cutoffs, "Cutoff window t0:t1 (repeatable)");

  auto* fit = app.add_subcommand("fit", "Tail fits and measurements");
  fit->add_option("--run", run_dir, "Run directory")->required();

  auto* rep = app.add_subcommand("report", "Verdicts, report files and plots");
  rep->add_option("--run", run_dir, "Run directory")->required();

  auto* ker = app.add_subcommand("kernels", "Kernel self-checks");
  ker->add_option("--k", ks, "Orders k >= 1")->expected(1, -1);
  ker->add_option("--t", kt, "Evaluation time")->check(CLI::PositiveNumber);
  ker->add_option("--out", out_dir, "Directory for kernels.txt / kernels.csv");

  CLI11_PARSE(app, argc, argv);
  (void)seedless;

  try {
    const std::optional<fs::path> out =
        out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir);
    if (*run) {
      const RunConfig cfg = load_config(config_path);
      if (sweep.empty()) {
        const auto r = run_pipeline(cfg, output_root(out));
        print_report(r);
        return r.exit_code();
      }
      const auto [key, values] = parse_sweep(sweep);
      const auto reps = run_sweep(cfg, key, values, jobs, output_root(out));
      for (const auto& r : reps) std::cout << fmt::format("{}: {}\n", r.name, r.status);
      return worst_exit(reps);
    }
    if (*sim) {
      if (config_path.empty() == run_dir.empty()) {
        std::cerr << "simulate: give exactly one of --config or --run\n";
        return 2;
      }
      const fs::path dir = run_dir.empty()
                               ? prepare_run(load_config(config_path), output_root(out))
                               : fs::path(run_dir);
      stage_simulate(dir);
      std::cout << fmt::format("simulate: {}\n",
                               RunManifest::load(dir).stages.at("simulate"));
      std::cout << dir.string() << "\n";
      return 0;
    }
    if (*rad) {
      stage_radiation(run_dir);
      std::cout << "radiation: ok\n";
      return 0;
    }
    if (*co) {
      std::vector<CutoffSpec> cs;
      for (const auto& c : cutoffs) cs.push_back(parse_cutoff(c));
      const auto kv = stage_coeffs(run_dir, cs);
      for (int i = 1; kv.count(fmt::format("cutoff.{}.label", i)); ++i) {
        const std::string k = fmt::format("cutoff.{}", i);
        const bool high = kv.at("coefficient_name") == "dX";
        std::cout << fmt::format("cutoff {}: {} = {}\n", kv.at(k + ".label"),
                                 high ? "dX" : "c0 (sphere average of c)",
                                 kv.at(high ? k + ".dX" : k + ".c_average"));
      }
      if (kv.count("cutoff_relative_difference"))
        std::cout << "relative difference: " << kv.at("cutoff_relative_difference") << "\n";
      std::cout << fmt::format("{} = {} +- {}\n", kv.at("coefficient_name"), kv.at("coefficient"),
                               kv.at("coefficient_uncertainty"));
      return 0;
    }
    if (*fit) {
      stage_fit(run_dir);
      std::cout << "fit: ok\n";
      return 0;
    }
    if (*rep) {
      const auto r = stage_report(run_dir);
      print_report(r);
      return r.exit_code();
    }
    if (*ker) {
      const auto kr = run_kernel_checks(ks, kt);
      std::cout << kr.to_text();
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "kernels.txt") << kr.to_text();
        std::ofstream(fs::path(out_dir) / "kernels.csv") << kr.to_csv();
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "stage error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
