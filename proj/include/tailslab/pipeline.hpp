#pragma once
// End-to-end runs: simulate -> radiation -> coeffs -> fit -> report, each stage
// reading and writing files in one run directory listed in manifest.txt.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tailslab/config.hpp"
#include "tailslab/kernels.hpp"
#include "tailslab/tailfit.hpp"

namespace tailslab {

namespace fs = std::filesystem;

struct StageError : std::runtime_error {
  StageError(const std::string& stage_, const std::string& msg)
      : std::runtime_error(stage_ + ": " + msg), stage(stage_) {}
  std::string stage;
};

// manifest.txt: run metadata, per-stage status and the file inventory with
// SHA-256 digests (paths relative to the run directory).
struct RunManifest {
  std::map<std::string, std::string> meta;
  std::map<std::string, std::string> stages;  // stage -> "ok" or "error: ..."
  std::map<std::string, std::string> files;   // relative path -> sha256
  std::vector<std::string> stage_order;

  static RunManifest load(const fs::path& run_dir);
  void save(const fs::path& run_dir) const;
  void set_stage(const std::string& stage, const std::string& status);
  void add_file(const fs::path& run_dir, const std::string& rel);
  // throws StageError if `rel` is not declared, missing, or its digest changed
  fs::path require(const fs::path& run_dir, const std::string& rel,
                   const std::string& stage) const;
};

struct Check {
  std::string name;
  double value = 0;
  std::string threshold;
  bool pass = false;
  bool required = true;  // informational checks do not enter the verdict
};

struct ProbeResult {
  TailFit fit;       // phi, exponent pinned to the expected value
  TailFit dfit;      // d_t phi, free fit
  Verdict verdict;
};

struct AsymptoticReport {
  std::string name, spec_hash;
  // pass, fail, no-tail, indeterminate, out-of-hypothesis, error
  std::string status = "error";
  int p = 3;
  std::string coefficient_name;  // c0 or dX
  double coefficient = 0, coefficient_uncertainty = 0;
  std::vector<ProbeResult> probes;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  int exit_code() const;
  std::string to_text() const;
  std::string to_csv() const;
};

// Output root: TAILSLAB_OUT if set, else `out`, else ./runs.
fs::path output_root(const std::optional<fs::path>& out = std::nullopt);

// Creates the run directory, writes config.ini and a fresh manifest.
fs::path prepare_run(const RunConfig& cfg, const fs::path& root);

// Stage runners; each loads config.ini from the run directory.
void stage_simulate(const fs::path& run_dir);
void stage_radiation(const fs::path& run_dir);
// Empty `cutoffs` uses the configured windows. Returns the lines of coefficients.txt.
std::map<std::string, std::string> stage_coeffs(const fs::path& run_dir,
                                                const std::vector<CutoffSpec>& cutoffs = {});
void stage_fit(const fs::path& run_dir);
AsymptoticReport stage_report(const fs::path& run_dir);

// All stages in order. A stage error is recorded in the manifest and the
// returned report has status "error"; artifacts written so far are kept.
AsymptoticReport run_pipeline(const RunConfig& cfg, const fs::path& root);
AsymptoticReport run_pipeline(const fs::path& config_path,
                              const std::optional<fs::path>& out = std::nullopt);

// Independent runs, one per value of `key`, `jobs` at a time.
std::vector<AsymptoticReport> run_sweep(const RunConfig& base, const std::string& key,
                                        const std::vector<std::string>& values, int jobs,
                                        const fs::path& root);

// Standalone kernel self-checks.
struct KernelRow {
  int k = 0;
  double t = 0;
  cplx exact, numeric;
  double rel_err = 0;
};
struct KernelReport {
  std::vector<KernelRow> rows;
  double umod_coefficient = 0;
  double umod_decay_constant = 0;  // r * |umod'(r)| at large r
  double bode_max_error = 0;       // analytic cases
  std::string to_text() const;
  std::string to_csv() const;
};
KernelReport run_kernel_checks(const std::vector<int>& ks, double t);

// key = value file helpers shared by the stages
std::map<std::string, std::string> read_kv_file(const fs::path& path);
void write_kv_file(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& kv);

}  // namespace tailslab
