#pragma once
// Run configuration: sectioned key = value text ([metric], [grid], [evolution],
// [nonlinearity], [data], [cutoff], [fit]). Every key has a default; see
// configs/defaults.ini.

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tailslab/coefficients.hpp"
#include "tailslab/evolution.hpp"
#include "tailslab/tailfit.hpp"

namespace tailslab {

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& key_, int line_, const std::string& msg);
  std::string key;
  int line;
};

struct FitSettings {
  double t_a = 200, t_b = 2000;
  VerdictTolerance tol{0.1, 0.8, 1.25};
  double profile_t_min = 100;
  double profile_v_lo = 0.5, profile_v_hi = 5;
  double apriori_ratio = 3;      // max/min of the decay monitor over the second half
  double c_average_rel = 1e-3;   // vanishing-average tolerance for c(w), p >= 4
  double cutoff_agreement = 0.01;
  double radiation_limit_t = 500;
  double radiation_limit_tol = 0.1;
  std::vector<double> probes;    // radii judged by the tail verdict; empty: r <= t_a / 10
  double profile_tol = 0.1;
  double recursion_t_min = 5;    // rad2 cross-check runs on [t_min, 1 / rho_max]
  double noise_floor = 1e-8;     // below this a compact linear run counts as tail-free
};

// Initial data as written in the file; `spec.data` is built from it.
// Harmonic lists read "l:m:amplitude, ..." and add to the constant part.
struct DataSettings {
  std::string symmetry = "spherical";
  int lmax = 0;
  double c1 = 0, c2 = 0, d1 = 0;
  std::string c1_harmonics, c2_harmonics, d1_harmonics;
  Bump bump0{1.0, 0.0, 0.5}, bump1{0.0, 0.0, 0.5};
  std::string pattern0_harmonics, pattern1_harmonics;  // empty: angularly constant
};

struct MetricSettings {
  std::string kind = "minkowski_hyperboloidal";
  double mass = 0;
  double height_scale = 1, height_slope = 1;
  double normal_form_gtilde = -1;
};

struct RunConfig {
  std::string name = "run";
  MetricSettings metric;
  DataSettings data;
  ProblemSpec spec;  // derived from metric/data plus [nonlinearity]
  GridSpec grid;
  double t_final = 100;
  OutputPlan plan;
  std::vector<CutoffSpec> cutoffs{CutoffSpec(0.5, 1.0), CutoffSpec(2.0, 4.0)};
  double truncation_tolerance = 1e-3;
  FitSettings fit;
  std::map<std::string, int> key_lines;  // "section.key" -> line it was read from

  // Rebuild `spec` from the settings (throws ConfigError).
  void finalize();
  // Canonical text form (all keys, fixed order); parsing it gives the same config.
  std::string to_text() const;
};

// Parse configuration text; `origin` names the source in error messages.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Apply "section.key=value" overrides (used by parameter sweeps).
RunConfig with_override(const RunConfig& cfg, const std::string& dotted_key,
                        const std::string& value);

// "grid.n=400,800" -> (grid.n, {400, 800})
std::pair<std::string, std::vector<std::string>> parse_sweep(const std::string& arg);

}  // namespace tailslab
