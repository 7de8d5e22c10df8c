#include "tailslab/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "tailslab/coefficients.hpp"
#include "tailslab/numerics.hpp"
#include "tailslab/radiation.hpp"
#include "tailslab/svg.hpp"
#include "tailslab/trajectory_io.hpp"

#ifndef TAILSLAB_VERSION
#define TAILSLAB_VERSION "dev"
#endif

namespace tailslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw IoError("missing CSV column " + name);
  }
};

Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  Csv c;
  std::string line;
  if (std::getline(in, line)) c.header = split(line, ',');
  while (std::getline(in, line))
    if (!line.empty()) c.rows.push_back(split(line, ','));
  return c;
}

double num_of(const std::string& s) { return s.empty() ? kNaN : std::stod(s); }

double kv_num(const std::map<std::string, std::string>& kv, const std::string& key,
              double fallback = kNaN) {
  const auto it = kv.find(key);
  return it == kv.end() || it->second.empty() ? fallback : std::stod(it->second);
}

std::string kv_str(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  return it == kv.end() ? "" : it->second;
}

std::string g(double v) { return fmt_double(v); }

RunConfig load_run_config(const fs::path& run_dir) { return load_config(run_dir / "config.ini"); }

ScriCoefficient cubic_coefficient(const ProblemSpec& spec) {
  return spec.power == 3 && spec.coeff.active() ? scri_coefficient(spec.coeff)
                                                : zero_coefficient();
}

AngularField gtilde_field(const ProblemSpec& spec, const std::shared_ptr<const SphereGrid>& grid) {
  return AngularField(grid, spec.metric.gtilde());
}

// Every file of the trajectory directory must be declared and intact.
Trajectory load_trajectory(const fs::path& run_dir, const RunManifest& man, const RunConfig& cfg,
                           const std::string& stage) {
  for (const auto& f : {"trajectory_meta.txt", "trajectory.csv", "scri_trace.csv",
                        "monitors.csv", "scri_near.bin", "snapshots.bin"})
    man.require(run_dir, std::string("trajectory/") + f, stage);
  return read_trajectory(run_dir / "trajectory", cfg.spec);
}

RadiationSeries load_radiation(const fs::path& run_dir, const RunManifest& man,
                               const std::shared_ptr<const SphereGrid>& grid,
                               const std::string& stage) {
  const Csv c = read_csv(man.require(run_dir, "radiation_nodal.csv", stage));
  const int it = c.col("t_star"), in = c.col("node"), i1 = c.col("rad1"), i2 = c.col("rad2"),
            i3 = c.col("rad3"), id = c.col("drad1");
  RadiationSeries rs;
  rs.grid = grid;
  const int nodes = grid->nodes();
  if (c.rows.size() % nodes != 0) throw IoError("radiation_nodal.csv: incomplete time slice");
  bool have_d = true;
  for (std::size_t r = 0; r < c.rows.size(); r += nodes) {
    rs.times.push_back(num_of(c.rows[r][it]));
    AngularField f1(grid), f2(grid), f3(grid), fd(grid);
    for (int k = 0; k < nodes; ++k) {
      const auto& row = c.rows[r + k];
      if (std::stoi(row[in]) != k) throw IoError("radiation_nodal.csv: node order");
      f1[k] = num_of(row[i1]);
      f2[k] = num_of(row[i2]);
      f3[k] = num_of(row[i3]);
      fd[k] = num_of(row[id]);
      if (!std::isfinite(fd[k])) have_d = false;
    }
    rs.rad1.push_back(std::move(f1));
    rs.rad2.push_back(std::move(f2));
    rs.rad3.push_back(std::move(f3));
    rs.drad1.push_back(std::move(fd));
  }
  if (!have_d) rs.drad1.clear();
  const auto meta = read_kv_file(man.require(run_dir, "radiation.txt", stage));
  rs.provenance1 = kv_str(meta, "provenance_rad1");
  rs.provenance2 = kv_str(meta, "provenance_rad2");
  rs.provenance3 = kv_str(meta, "provenance_rad3");
  return rs;
}

std::vector<std::size_t> verdict_probes(const RunConfig& cfg, const std::vector<double>& probe_r,
                                        const std::string& stage) {
  std::vector<std::size_t> out;
  if (cfg.fit.probes.empty()) {
    for (std::size_t i = 0; i < probe_r.size(); ++i)
      if (probe_r[i] <= cfg.fit.t_a / 10) out.push_back(i);
    if (out.empty())
      throw StageError(stage, fmt::format("no probe with r <= t_a/10 = {:g}", cfg.fit.t_a / 10));
    return out;
  }
  for (double r : cfg.fit.probes) {
    std::size_t best = probe_r.size();
    for (std::size_t i = 0; i < probe_r.size(); ++i)
      if (std::abs(probe_r[i] - r) <= 1e-9 * std::max(1.0, r)) best = i;
    if (best == probe_r.size())
      throw StageError(stage, fmt::format("fit.probes lists r = {:g}, which is not an "
                                          "evolution probe",
                                          r));
    out.push_back(best);
  }
  return out;
}

// Stage wrapper: records status in the manifest, converts failures to StageError.
template <class F>
auto run_stage(const fs::path& run_dir, const std::string& stage, F&& body) {
  RunManifest man = RunManifest::load(run_dir);
  man.set_stage(stage, "running");
  try {
    if constexpr (std::is_void_v<decltype(body(man))>) {
      body(man);
      if (man.stages[stage] == "running") man.set_stage(stage, "ok");
      man.save(run_dir);
    } else {
      auto out = body(man);
      if (man.stages[stage] == "running") man.set_stage(stage, "ok");
      man.save(run_dir);
      return out;
    }
  } catch (const StageError& e) {
    man.set_stage(stage, std::string("error: ") + e.what());
    man.save(run_dir);
    throw;
  } catch (const std::exception& e) {
    man.set_stage(stage, std::string("error: ") + e.what());
    man.save(run_dir);
    throw StageError(stage, e.what());
  }
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
                           c == '_')
                              ? c
                              : '_';
  return out;
}

// one CSV cell
std::string cell(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

TailFit fit_from_row(const Csv& c, const std::vector<std::string>& row) {
  TailFit f;
  f.probe = row[c.col("probe")];
  f.t_a = num_of(row[c.col("t_a")]);
  f.t_b = num_of(row[c.col("t_b")]);
  f.exponent = num_of(row[c.col("exponent")]);
  f.exponent_err = num_of(row[c.col("exponent_err")]);
  f.amplitude = num_of(row[c.col("amplitude")]);
  f.amplitude_err = num_of(row[c.col("amplitude_err")]);
  f.pinned_exponent = num_of(row[c.col("pinned_exponent")]);
  f.pinned_amplitude = num_of(row[c.col("pinned_amplitude")]);
  f.pinned_amplitude_err = num_of(row[c.col("pinned_amplitude_err")]);
  f.has_pinned = f.pinned_exponent > 0;
  f.goodness = num_of(row[c.col("goodness")]);
  f.sign = std::stoi(row[c.col("sign")]);
  f.power_law = row[c.col("power_law")] == "1";
  f.exponent_drift = num_of(row[c.col("exponent_drift")]);
  return f;
}

}  // namespace

// ---------------------------------------------------------------- kv files

std::map<std::string, std::string> read_kv_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

void write_kv_file(const fs::path& path,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string text;
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  write_file(path, text);
}

// ---------------------------------------------------------------- manifest

RunManifest RunManifest::load(const fs::path& run_dir) {
  const fs::path p = run_dir / "manifest.txt";
  if (!fs::exists(p))
    throw StageError("manifest", "no manifest.txt in " + run_dir.string() +
                                     " (create the run with `simulate --config`)");
  RunManifest m;
  for (const auto& [k, v] : read_kv_file(p)) {
    if (k.rfind("stage.", 0) == 0) {
      m.stages[k.substr(6)] = v;
    } else if (k.rfind("file.", 0) == 0) {
      m.files[k.substr(5)] = v;
    } else if (k == "stage_order") {
      for (const auto& s : split(v, ','))
        if (!s.empty()) m.stage_order.push_back(s);
    } else {
      m.meta[k] = v;
    }
  }
  return m;
}

void RunManifest::save(const fs::path& run_dir) const {
  std::vector<std::pair<std::string, std::string>> kv(meta.begin(), meta.end());
  std::string order;
  for (const auto& s : stage_order) order += (order.empty() ? "" : ",") + s;
  kv.emplace_back("stage_order", order);
  for (const auto& s : stage_order) kv.emplace_back("stage." + s, stages.at(s));
  for (const auto& [f, h] : files) kv.emplace_back("file." + f, h);
  write_kv_file(run_dir / "manifest.txt", kv);
}

void RunManifest::set_stage(const std::string& stage, const std::string& status) {
  if (!stages.count(stage)) stage_order.push_back(stage);
  std::string flat = status;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  stages[stage] = flat;
}

void RunManifest::add_file(const fs::path& run_dir, const std::string& rel) {
  files[rel] = num::sha256_hex(read_file(run_dir / rel));
}

fs::path RunManifest::require(const fs::path& run_dir, const std::string& rel,
                              const std::string& stage) const {
  const auto it = files.find(rel);
  const fs::path p = run_dir / rel;
  if (it == files.end() || !fs::exists(p))
    throw StageError(stage, "missing upstream artifact " + rel);
  if (num::sha256_hex(read_file(p)) != it->second)
    throw StageError(stage, rel + " changed since it was recorded in the manifest");
  return p;
}

// ---------------------------------------------------------------- report

int AsymptoticReport::exit_code() const {
  if (status == "pass" || status == "no-tail") return 0;
  if (status == "fail" || status == "indeterminate") return 1;
  if (status == "out-of-hypothesis") return 4;
  return 3;
}

std::string AsymptoticReport::to_text() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("name", name);
  kv.emplace_back("spec_hash", spec_hash);
  kv.emplace_back("status", status);
  kv.emplace_back("p", std::to_string(p));
  kv.emplace_back("coefficient_name", coefficient_name);
  kv.emplace_back("coefficient", g(coefficient));
  kv.emplace_back("coefficient_uncertainty", g(coefficient_uncertainty));
  for (const auto& pr : probes) {
    const std::string k = "probe." + pr.fit.probe;
    kv.emplace_back(k + ".window", g(pr.fit.t_a) + ":" + g(pr.fit.t_b));
    kv.emplace_back(k + ".exponent", g(pr.fit.exponent));
    kv.emplace_back(k + ".exponent_err", g(pr.fit.exponent_err));
    kv.emplace_back(k + ".amplitude", g(pr.fit.amplitude));
    kv.emplace_back(k + ".pinned_amplitude", g(pr.fit.pinned_amplitude));
    kv.emplace_back(k + ".sign", std::to_string(pr.fit.sign));
    kv.emplace_back(k + ".ratio", g(pr.verdict.ratio));
    kv.emplace_back(k + ".ratio_free", g(pr.verdict.ratio_free));
    kv.emplace_back(k + ".verdict", pr.verdict.describe());
  }
  for (const auto& c : checks)
    kv.emplace_back("check." + c.name,
                    fmt::format("{} value {} threshold {}{}", c.pass ? "pass" : "fail", g(c.value),
                                c.threshold, c.required ? "" : " (informational)"));
  for (std::size_t i = 0; i < notes.size(); ++i)
    kv.emplace_back(fmt::format("note.{}", i + 1), notes[i]);
  std::string text;
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  return text;
}

std::string AsymptoticReport::to_csv() const {
  std::string out = "check,value,threshold,pass,required\n";
  for (const auto& pr : probes) {
    out += fmt::format("tail_exponent.{},{},{:g}+-{:g},{},1\n", pr.fit.probe, g(pr.fit.exponent),
                       pr.verdict.expected_exponent, pr.verdict.tol.exponent,
                       pr.verdict.exponent_ok ? 1 : 0);
    out += fmt::format("tail_ratio.{},{},[{:g}:{:g}],{},1\n", pr.fit.probe, g(pr.verdict.ratio),
                       pr.verdict.tol.ratio_lo, pr.verdict.tol.ratio_hi,
                       pr.verdict.ratio_ok && pr.verdict.sign_ok ? 1 : 0);
  }
  for (const auto& c : checks)
    out += fmt::format("{},{},{},{},{}\n", c.name, g(c.value), c.threshold, c.pass ? 1 : 0,
                       c.required ? 1 : 0);
  return out;
}

// ---------------------------------------------------------------- run setup

fs::path output_root(const std::optional<fs::path>& out) {
  if (const char* env = std::getenv("TAILSLAB_OUT"); env && *env) return fs::path(env);
  return out ? *out : fs::path("runs");
}

fs::path prepare_run(const RunConfig& cfg, const fs::path& root) {
  const fs::path dir = root / sanitize(cfg.name);
  fs::create_directories(dir);
  write_file(dir / "config.ini", cfg.to_text());
  RunManifest m;
  m.meta["name"] = cfg.name;
  m.meta["version"] = TAILSLAB_VERSION;
  m.meta["spec_hash"] = spec_hash(cfg.spec, cfg.grid, cfg.t_final);
  m.meta["grid"] = fmt::format("n={} cfl={:g} ko={:g}", cfg.grid.n, cfg.grid.cfl, cfg.grid.ko);
  m.meta["metric"] = cfg.spec.metric.describe();
  m.meta["height"] = fmt::format(
      "t_* = t - h(r), h'(r) = {:g} r / (A(r) sqrt({:g}^2 + r^2)); chosen here, not fixed by "
      "the asymptotic theory",
      cfg.metric.height_slope, cfg.metric.height_scale);
  m.meta["p"] = std::to_string(cfg.spec.power);
  m.meta["data"] = fmt::format(
      "{} lmax={} c1={:g} c2={:g} d1={:g} bump0=({:g},{:g},{:g}) bump1=({:g},{:g},{:g})",
      cfg.data.symmetry, cfg.data.lmax, cfg.data.c1, cfg.data.c2, cfg.data.d1,
      cfg.data.bump0.amplitude, cfg.data.bump0.center, cfg.data.bump0.width,
      cfg.data.bump1.amplitude, cfg.data.bump1.center, cfg.data.bump1.width);
  m.meta["t_final"] = g(cfg.t_final);
  m.add_file(dir, "config.ini");
  m.save(dir);
  return dir;
}

// ---------------------------------------------------------------- simulate

void stage_simulate(const fs::path& run_dir) {
  run_stage(run_dir, "simulate", [&](RunManifest& man) {
    man.require(run_dir, "config.ini", "simulate");
    const RunConfig cfg = load_run_config(run_dir);
    const fs::path tdir = run_dir / "trajectory";
    auto record = [&](const Trajectory& traj) {
      for (const auto& f : write_trajectory(traj, tdir)) man.add_file(run_dir, "trajectory/" + f);
    };
    try {
      record(evolve(cfg.spec, cfg.grid, cfg.t_final, cfg.plan));
    } catch (const BlowupError& e) {
      if (e.partial) record(*e.partial);
      man.set_stage("simulate",
                    fmt::format("out-of-hypothesis: blowup at t_* = {:.6g} (global existence is "
                                "assumed by the tail theory)",
                                e.time));
    }
  });
}

// ---------------------------------------------------------------- radiation

void stage_radiation(const fs::path& run_dir) {
  run_stage(run_dir, "radiation", [&](RunManifest& man) {
    const RunConfig cfg = load_run_config(run_dir);
    const Trajectory traj = load_trajectory(run_dir, man, cfg, "radiation");
    const ProblemSpec& spec = cfg.spec;
    RadiationSeries rs = extract_rad1(traj);
    const auto grid = rs.grid;
    const auto decomp = decompose(spec.metric, grid->lmax());
    rs = rad2_from_recursion(rs, spec.data.c2, spec.data.d1, gtilde_field(spec, grid),
                             cubic_coefficient(spec));
    if (spec.power >= 4) {
      rs = rad3_from_recursion(rs, decomp, scri_coefficient(spec.coeff), spec.power);
    } else {
      rs.rad3.assign(rs.size(), AngularField(grid, kNaN));
      rs.provenance3 = "not computed (p < 4)";
    }
    const DirectExpansion de = fit_near_scri_expansion(traj);
    const int nodes = grid->nodes();
    {
      std::string out = "t_star,ell,m,rad1_lm,rad2_lm,rad3_lm\n";
      for (int i = 0; i < rs.size(); ++i) {
        const auto c1 = rs.rad1[i].coefficients(), c2 = rs.rad2[i].coefficients(),
                   c3 = rs.rad3[i].coefficients();
        for (int mode = 0; mode < grid->nmodes(); ++mode) {
          int ell, m;
          SphereGrid::mode_of(mode, ell, m);
          out += fmt::format("{},{},{},{},{},{}\n", g(rs.times[i]), ell, m, g(c1[mode]),
                             g(c2[mode]), g(c3[mode]));
        }
      }
      write_file(run_dir / "radiation.csv", out);
    }
    {
      std::string out = "t_star,node,theta,phi,rad1,rad2,rad3,drad1\n";
      const bool have_d = static_cast<int>(rs.drad1.size()) == rs.size();
      for (int i = 0; i < rs.size(); ++i)
        for (int k = 0; k < nodes; ++k)
          out += fmt::format("{},{},{},{},{},{},{},{}\n", g(rs.times[i]), k, g(grid->theta(k)),
                             g(grid->phi(k)), g(rs.rad1[i][k]), g(rs.rad2[i][k]),
                             g(rs.rad3[i][k]), have_d ? g(rs.drad1[i][k]) : "nan");
      write_file(run_dir / "radiation_nodal.csv", out);
    }
    {
      std::string out = "t_star,node,rad2_fit,rad2_err,rad3_fit,rad3_err\n";
      for (std::size_t i = 0; i < de.times.size(); ++i)
        for (int k = 0; k < nodes; ++k)
          out += fmt::format("{},{},{},{},{},{}\n", g(de.times[i]), k, g(de.rad2[i][k]),
                             g(de.rad2_err[i][k]), g(de.rad3[i][k]), g(de.rad3_err[i][k]));
      write_file(run_dir / "radiation_direct.csv", out);
    }
    std::vector<std::pair<std::string, std::string>> kv{
        {"provenance_rad1", rs.provenance1},
        {"provenance_rad2", rs.provenance2},
        {"provenance_rad3", rs.provenance3},
        {"rad1_extrapolation_gap", g(rs.rad1_extrapolation_gap)}};
    for (std::size_t i = 0; i < rs.warnings.size(); ++i)
      kv.emplace_back(fmt::format("warning.{}", i + 1), rs.warnings[i]);
    write_kv_file(run_dir / "radiation.txt", kv);
    for (const char* f : {"radiation.csv", "radiation_nodal.csv", "radiation_direct.csv",
                          "radiation.txt"})
      man.add_file(run_dir, f);
  });
}

// ---------------------------------------------------------------- coeffs

std::map<std::string, std::string> stage_coeffs(const fs::path& run_dir,
                                                const std::vector<CutoffSpec>& cutoffs_in) {
  return run_stage(run_dir, "coeffs", [&](RunManifest& man) {
    const RunConfig cfg = load_run_config(run_dir);
    const auto& cutoffs = cutoffs_in.empty() ? cfg.cutoffs : cutoffs_in;
    const Trajectory traj = load_trajectory(run_dir, man, cfg, "coeffs");
    const ProblemSpec& spec = cfg.spec;
    const auto grid = traj.sphere;
    const RadiationSeries rs = load_radiation(run_dir, man, grid, "coeffs");
    const auto decomp = decompose(spec.metric, grid->lmax());
    const AngularField gt = gtilde_field(spec, grid);
    const int p = spec.power;
    const bool nonlinear = spec.coeff.active();
    const bool high = nonlinear && p >= 4;
    const bool forcing_ok = cfg.plan.snapshots && nonlinear;

    std::vector<std::pair<std::string, std::string>> kv;
    std::vector<std::string> notes;
    std::string csv = "cutoff,node,theta,phi,c,d,ctilde\n";
    kv.emplace_back("p", std::to_string(p));
    kv.emplace_back("metric", spec.metric.describe());
    kv.emplace_back("gtilde", g(spec.metric.gtilde()));
    kv.emplace_back("mass", g(spec.metric.mass));
    kv.emplace_back("t_final", g(traj.t_final));

    double coefficient = 0, uncertainty = 0;
    std::string name = high ? "dX" : "c0";
    std::vector<double> per_cut;
    if (!high) {
      const ScriCoefficient a0 = cubic_coefficient(spec);
      if (!nonlinear && !spec.data.expanded()) {
        notes.push_back("compact linear data: no tail is predicted (c0 = 0)");
      } else {
        const C0Result r = c0(rs, a0, spec.data.c2, spec.data.d1, gt, cfg.truncation_tolerance);
        coefficient = r.value;
        uncertainty = r.uncertainty;
        kv.emplace_back("c0.integral", g(r.integral));
        kv.emplace_back("c0.remainder", g(r.remainder));
      }
      for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        const auto& cut = cutoffs[i];
        const std::string k = fmt::format("cutoff.{}", i + 1);
        kv.emplace_back(k + ".label", cut.label());
        const AngularField ca = c_angular(rs, gt, cut, a0);
        kv.emplace_back(k + ".c_average", g(ca.average()));
        per_cut.push_back(ca.average());
        for (int q = 0; q < ca.size(); ++q)
          csv += fmt::format("{},{},{},{},{},nan,nan\n", cut.label(), q, g(grid->theta(q)),
                             g(grid->phi(q)), g(ca[q]));
        if (forcing_ok) {
          try {
            const ForcingProfile F = assemble_forcing(traj, spec, cut, cfg.truncation_tolerance);
            kv.emplace_back(k + ".forcing_c", g(F.c_fit.average()));
            kv.emplace_back(k + ".forcing_residual", g(F.fit_residual_norm));
            kv.emplace_back(k + ".forcing_rho", g(F.fit_rho_min) + ":" + g(F.fit_rho_max));
            kv.emplace_back(k + ".forcing_exponent", g(F.tail_exponent));
          } catch (const CoefficientError& e) {
            notes.push_back(fmt::format("forcing at cutoff {}: {}", cut.label(), e.what()));
          }
        }
      }
    } else {
      const ScriCoefficient b0 = scri_coefficient(spec.coeff);
      for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        const auto& cut = cutoffs[i];
        const std::string k = fmt::format("cutoff.{}", i + 1);
        kv.emplace_back(k + ".label", cut.label());
        const AngularField ca = c_angular(rs, gt, cut, zero_coefficient());
        const double scale = c_angular_scale(rs, gt, cut);
        kv.emplace_back(k + ".c_average", g(ca.average()));
        kv.emplace_back(k + ".c_scale", g(scale));
        kv.emplace_back(k + ".c_average_rel", g(std::abs(ca.average()) / scale));
        const AngularField d = d_angular(rs, decomp, b0, p, cut);
        kv.emplace_back(k + ".d_average", g(d.average()));
        double dx = kNaN;
        AngularField ct(grid, kNaN);
        try {
          ct = tilde_c(ca, cfg.fit.c_average_rel * scale);
          if (!forcing_ok) throw CoefficientError("forcing needs snapshots (evolution.snapshots)");
          const ForcingProfile F = assemble_forcing(traj, spec, cut, cfg.truncation_tolerance);
          kv.emplace_back(k + ".forcing_c", g(F.c_fit.average()));
          kv.emplace_back(k + ".forcing_residual", g(F.fit_residual_norm));
          kv.emplace_back(k + ".forcing_rho", g(F.fit_rho_min) + ":" + g(F.fit_rho_max));
          dx = dX(F, ct, d, spec.metric, decomp);
        } catch (const CoefficientError& e) {
          notes.push_back(fmt::format("dX at cutoff {}: {}", cut.label(), e.what()));
        }
        const double m1 = first_moment_coefficient(rs, gt, cut);
        kv.emplace_back(k + ".dX", g(dx));
        kv.emplace_back(k + ".first_moment", g(m1));
        // tail amplitude predicted once the first time moment is included
        kv.emplace_back(k + ".dX_with_moment", g(-(dx - 2 * m1)));
        per_cut.push_back(dx);
        if (i == 0) coefficient = dx;
        for (int q = 0; q < ca.size(); ++q)
          csv += fmt::format("{},{},{},{},{},{},{}\n", cut.label(), q, g(grid->theta(q)),
                             g(grid->phi(q)), g(ca[q]), g(d[q]), g(ct[q]));
      }
    }
    if (per_cut.size() >= 2) {
      const double a = per_cut[0], b = per_cut[1];
      kv.emplace_back("cutoff_relative_difference",
                      g(std::abs(a - b) / std::max(std::abs(a), std::abs(b))));
    }
    kv.emplace_back("coefficient_name", name);
    kv.emplace_back("coefficient", g(coefficient));
    kv.emplace_back("coefficient_uncertainty", g(uncertainty));
    for (std::size_t i = 0; i < notes.size(); ++i)
      kv.emplace_back(fmt::format("note.{}", i + 1), notes[i]);
    write_kv_file(run_dir / "coefficients.txt", kv);
    write_file(run_dir / "coefficients.csv", csv);
    man.add_file(run_dir, "coefficients.txt");
    man.add_file(run_dir, "coefficients.csv");
    return std::map<std::string, std::string>(kv.begin(), kv.end());
  });
}

// ---------------------------------------------------------------- fit

void stage_fit(const fs::path& run_dir) {
  run_stage(run_dir, "fit", [&](RunManifest& man) {
    const RunConfig cfg = load_run_config(run_dir);
    const Trajectory traj = load_trajectory(run_dir, man, cfg, "fit");
    const auto coeffs = read_kv_file(man.require(run_dir, "coefficients.txt", "fit"));
    const double coefficient = kv_num(coeffs, "coefficient");
    const int p = cfg.spec.power;
    const bool high = cfg.spec.coeff.active() && p >= 4;
    const double expected = high ? 3.0 : 2.0;
    const auto probes = verdict_probes(cfg, traj.probe_r, "fit");
    const auto& t = traj.probe_t;
    const double T = traj.t_final;
    std::vector<std::pair<std::string, std::string>> kv;

    std::string csv =
        "probe,r,series,t_a,t_b,exponent,exponent_err,amplitude,amplitude_err,pinned_exponent,"
        "pinned_amplitude,pinned_amplitude_err,goodness,sign,power_law,exponent_drift,"
        "shift_change,shift_ok,error\n";
    auto row = [&](const std::string& label, double r, const std::string& series,
                   const TailFit& f, const WindowShift* w, const std::string& err) {
      csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", label, g(r),
                         series, g(f.t_a), g(f.t_b), g(f.exponent), g(f.exponent_err),
                         g(f.amplitude), g(f.amplitude_err), g(f.pinned_exponent),
                         g(f.pinned_amplitude), g(f.pinned_amplitude_err), g(f.goodness), f.sign,
                         f.power_law ? 1 : 0, g(f.exponent_drift),
                         w ? g(w->amplitude_change) : "nan", w ? (w->ok ? "1" : "0") : "nan",
                         err);
    };
    double late_max = 0;
    for (std::size_t pi : probes) {
      const double r = traj.probe_r[pi];
      const std::string label = fmt::format("r={:g}", r);
      const auto phi = probe_series(traj, static_cast<int>(pi));
      const auto dphi = probe_series(traj, static_cast<int>(pi), 0, true);
      for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= cfg.fit.t_a) late_max = std::max(late_max, std::abs(phi[i]));
      if (coefficient == 0 && late_max < cfg.fit.noise_floor) continue;
      try {
        const TailFit f = fit_power_law(t, phi, cfg.fit.t_a, cfg.fit.t_b, expected, label);
        WindowShift w;
        std::string werr;
        try {
          w = window_shift_check(t, phi, cfg.fit.t_a, cfg.fit.t_b, expected);
        } catch (const FitError& e) {
          werr = e.what();
        }
        row(label, r, "phi", f, werr.empty() ? &w : nullptr, "");
      } catch (const FitError& e) {
        row(label, r, "phi", TailFit{label}, nullptr, cell(e.what()));
      }
      try {
        row(label, r, "dphi", fit_power_law(t, dphi, cfg.fit.t_a, cfg.fit.t_b, 0, label), nullptr,
            "");
      } catch (const FitError& e) {
        row(label, r, "dphi", TailFit{label}, nullptr, cell(e.what()));
      }
    }
    kv.emplace_back("late_max_abs_phi", g(late_max));

    // decay monitor over the second half of the run
    double mx = 0, mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.mon_t.size(); ++i)
      if (traj.mon_t[i] >= T / 2) {
        mx = std::max(mx, traj.apriori[i]);
        mn = std::min(mn, traj.apriori[i]);
      }
    kv.emplace_back("apriori_max_over_min", g(mn > 0 ? mx / mn : kNaN));

    if (!high && coefficient != 0) {
      try {
        const ProfileReport pr = profile_check(traj, coefficient, cfg.fit.profile_t_min,
                                               cfg.fit.profile_v_lo, cfg.fit.profile_v_hi);
        kv.emplace_back("profile.sup_error", g(pr.sup_error));
        kv.emplace_back("profile.worst_t", g(pr.worst_t));
        kv.emplace_back("profile.worst_v", g(pr.worst_v));
        kv.emplace_back("profile.v_range", g(pr.v_min) + ":" + g(pr.v_max));
        kv.emplace_back("profile.samples", std::to_string(pr.samples));
      } catch (const FitError& e) {
        kv.emplace_back("profile.error", e.what());
      }
      const RadiationSeries rs = load_radiation(run_dir, man, traj.sphere, "fit");
      if (T >= cfg.fit.radiation_limit_t) {
        for (int i = 0; i < rs.size(); ++i)
          if (rs.times[i] >= cfg.fit.radiation_limit_t) {
            kv.emplace_back("radiation_limit.t", g(rs.times[i]));
            kv.emplace_back("radiation_limit.t_rad1", g(rs.times[i] * rs.rad1[i].average()));
            kv.emplace_back("radiation_limit.ratio",
                            g(rs.times[i] * rs.rad1[i].average() / coefficient));
            break;
          }
      }
      // second radiation field: recursion against the near-scri polynomial fit
      const Csv dc = read_csv(man.require(run_dir, "radiation_direct.csv", "fit"));
      const int K = cfg.plan.near_scri;
      const double s_in = 1.0 - static_cast<double>(K - 1) / cfg.grid.n;
      const double rho_max = (1 - s_in) / (2 * s_in);
      const double t_hi = std::min(T, 1 / rho_max);
      const int it = dc.col("t_star"), in = dc.col("node"), iv = dc.col("rad2_fit"),
                ie = dc.col("rad2_err");
      double worst = 0;
      int samples = 0, within = 0;
      std::size_t slice = 0;
      const int nodes = traj.sphere->nodes();
      for (std::size_t r = 0; r < dc.rows.size(); ++r) {
        const double tt = num_of(dc.rows[r][it]);
        const int node = std::stoi(dc.rows[r][in]);
        slice = r / nodes;
        if (tt < cfg.fit.recursion_t_min || tt > t_hi) continue;
        if (slice >= static_cast<std::size_t>(rs.size()) || rs.times[slice] != tt)
          throw StageError("fit", "radiation_direct.csv and radiation_nodal.csv time grids differ");
        const double q =
            std::abs(rs.rad2[slice][node] - num_of(dc.rows[r][iv])) / num_of(dc.rows[r][ie]);
        worst = std::max(worst, q);
        ++samples;
        if (q <= 1) ++within;
      }
      kv.emplace_back("recursion.window", g(cfg.fit.recursion_t_min) + ":" + g(t_hi));
      kv.emplace_back("recursion.samples", std::to_string(samples));
      kv.emplace_back("recursion.within_error", std::to_string(within));
      kv.emplace_back("recursion.worst_over_error", g(samples ? worst : kNaN));
    }
    write_file(run_dir / "fits.csv", csv);
    write_kv_file(run_dir / "measurements.txt", kv);
    man.add_file(run_dir, "fits.csv");
    man.add_file(run_dir, "measurements.txt");
  });
}

// ---------------------------------------------------------------- report

namespace {

void write_plots(const fs::path& run_dir, const RunManifest& man, const RunConfig& cfg,
                 const AsymptoticReport& rep, std::vector<std::string>& written) {
  const auto path = man.require(run_dir, "trajectory/trajectory.csv", "report");
  const Csv c = read_csv(path);
  const int it = c.col("t_star"), ir = c.col("r"), ip = c.col("phi");
  std::map<double, PlotSeries> by_r;
  std::map<double, std::vector<std::pair<double, double>>> by_t;  // t -> (r, phi)
  for (const auto& row : c.rows) {
    const double r = num_of(row[ir]), t = num_of(row[it]), phi = num_of(row[ip]);
    if (by_r.count(r) && !by_r[r].x.empty() && by_r[r].x.back() == t) continue;  // node 0 only
    auto& s = by_r[r];
    s.label = fmt::format("r = {:g}", r);
    s.x.push_back(t);
    s.y.push_back(std::abs(phi));
    by_t[t].emplace_back(r, phi);
  }
  Chart tails;
  tails.title = fmt::format("{}: |phi| at the probes", rep.name);
  tails.xlabel = "t_*";
  tails.ylabel = "|phi|";
  tails.logx = tails.logy = true;
  for (const auto& pr : rep.probes)
    for (const auto& [r, s] : by_r)
      if (fmt::format("r={:g}", r) == pr.fit.probe) tails.series.push_back(s);
  if (rep.coefficient != 0 && std::isfinite(rep.coefficient)) {
    PlotSeries pred;
    pred.label = fmt::format("2 {} t^-{}", rep.coefficient_name, rep.p == 3 ? 2 : 3);
    pred.dashed = true;
    const double e = rep.coefficient_name == "dX" ? 3.0 : 2.0;
    for (double t = cfg.fit.t_a / 4; t <= cfg.t_final; t *= 1.1) {
      pred.x.push_back(t);
      pred.y.push_back(std::abs(2 * rep.coefficient) * std::pow(t, -e));
    }
    tails.series.push_back(pred);
  }
  write_file(run_dir / "tails.svg", render_svg(tails));
  written.push_back("tails.svg");

  if (rep.coefficient_name == "c0" && rep.coefficient != 0) {
    Chart prof;
    prof.title = fmt::format("{}: phi t^2 / (2 c0) against v = t / r", rep.name);
    prof.xlabel = "v";
    prof.ylabel = "phi t^2 / (2 c0)";
    prof.logx = true;
    PlotSeries model;
    model.label = "v / (v + 2)";
    model.dashed = true;
    for (double v = 0.05; v <= 200; v *= 1.1) {
      model.x.push_back(v);
      model.y.push_back(v / (v + 2));
    }
    for (double target : {cfg.fit.profile_t_min, 3 * cfg.fit.profile_t_min, cfg.t_final}) {
      auto itt = by_t.lower_bound(target);
      if (itt == by_t.end()) continue;
      PlotSeries s;
      s.label = fmt::format("t = {:.4g}", itt->first);
      auto pts = itt->second;
      std::sort(pts.begin(), pts.end(), [](auto a, auto b) { return a.first > b.first; });
      for (const auto& [r, phi] : pts) {
        s.x.push_back(itt->first / r);
        s.y.push_back(phi * itt->first * itt->first / (2 * rep.coefficient));
      }
      prof.series.push_back(s);
    }
    prof.series.push_back(model);
    write_file(run_dir / "profile.svg", render_svg(prof));
    written.push_back("profile.svg");
  }
}

}  // namespace

AsymptoticReport stage_report(const fs::path& run_dir) {
  return run_stage(run_dir, "report", [&](RunManifest& man) {
    const RunConfig cfg = load_run_config(run_dir);
    AsymptoticReport rep;
    rep.name = cfg.name;
    rep.spec_hash = kv_str(man.meta, "spec_hash");
    rep.p = cfg.spec.power;
    const bool high = cfg.spec.coeff.active() && rep.p >= 4;
    rep.coefficient_name = high ? "dX" : "c0";
    rep.notes.push_back("height function: " + kv_str(man.meta, "height"));
    auto finish = [&](AsymptoticReport& r) {
      write_file(run_dir / "report.txt", r.to_text());
      write_file(run_dir / "report.csv", r.to_csv());
      man.add_file(run_dir, "report.txt");
      man.add_file(run_dir, "report.csv");
      return r;
    };

    const std::string sim = man.stages.count("simulate") ? man.stages["simulate"] : "";
    if (sim.rfind("out-of-hypothesis", 0) == 0) {
      rep.status = "out-of-hypothesis";
      rep.notes.push_back(sim);
      return finish(rep);
    }
    for (const auto& s : man.stage_order)
      if (s != "report" && man.stages[s].rfind("error", 0) == 0) {
        rep.status = "error";
        rep.notes.push_back("stage " + s + ": " + man.stages[s]);
        return finish(rep);
      }

    const auto coeffs = read_kv_file(man.require(run_dir, "coefficients.txt", "report"));
    const auto meas = read_kv_file(man.require(run_dir, "measurements.txt", "report"));
    const Csv fits = read_csv(man.require(run_dir, "fits.csv", "report"));
    rep.coefficient = kv_num(coeffs, "coefficient");
    rep.coefficient_uncertainty = kv_num(coeffs, "coefficient_uncertainty", 0);
    for (int i = 1;; ++i) {
      const auto n = kv_str(coeffs, fmt::format("note.{}", i));
      if (n.empty()) break;
      rep.notes.push_back(n);
    }
    const VerdictTolerance& tol = cfg.fit.tol;

    if (rep.coefficient == 0) {
      const double late = kv_num(meas, "late_max_abs_phi");
      Check c{"no_tail_late_max_abs_phi", late, fmt::format("< {:g}", cfg.fit.noise_floor),
              late < cfg.fit.noise_floor, false};
      rep.checks.push_back(c);
      rep.status = c.pass ? "no-tail" : "indeterminate";
      rep.notes.push_back(c.pass ? "late-time field below the noise floor (no tail)"
                                 : "predicted coefficient is zero but a late-time field remains");
      return finish(rep);
    }

    // tail verdicts
    std::map<std::string, TailFit> dfits;
    for (const auto& row : fits.rows)
      if (row[fits.col("series")] == "dphi" && row[fits.col("error")].empty())
        dfits[row[fits.col("probe")]] = fit_from_row(fits, row);
    for (const auto& row : fits.rows) {
      if (row[fits.col("series")] != "phi") continue;
      const std::string label = row[fits.col("probe")];
      if (!row[fits.col("error")].empty()) {
        rep.checks.push_back({"tail_fit." + label, kNaN, "fit succeeds", false, true});
        rep.notes.push_back(label + ": " + row[fits.col("error")]);
        continue;
      }
      ProbeResult pr;
      pr.fit = fit_from_row(fits, row);
      pr.verdict = price_verdict(pr.fit, rep.coefficient, high ? rep.p : 3, tol);
      if (dfits.count(label)) {
        pr.dfit = dfits[label];
        const double gap = pr.dfit.exponent - pr.fit.exponent;
        rep.checks.push_back({"derivative_exponent_gap." + label, gap, "1 +- 0.1",
                              std::abs(gap - 1) <= 0.1, false});
      }
      const std::string shift = row[fits.col("shift_change")];
      if (shift != "nan")
        rep.checks.push_back({"window_shift." + label, num_of(shift),
                              fmt::format("< 3 x {}", g(pr.fit.pinned_amplitude_err)),
                              row[fits.col("shift_ok")] == "1", false});
      rep.probes.push_back(pr);
    }
    if (rep.probes.empty()) rep.checks.push_back({"tail_fits", 0, ">= 1 probe", false, true});

    const double ap = kv_num(meas, "apriori_max_over_min");
    rep.checks.push_back({"apriori_monitor_max_over_min", ap,
                          fmt::format("< {:g}", cfg.fit.apriori_ratio),
                          ap < cfg.fit.apriori_ratio, true});

    if (!high) {
      if (coeffs.count("cutoff_relative_difference")) {
        const double d = kv_num(coeffs, "cutoff_relative_difference");
        rep.checks.push_back({"c0_cutoff_agreement", d,
                              fmt::format("<= {:g}", cfg.fit.cutoff_agreement),
                              d <= cfg.fit.cutoff_agreement, true});
      }
      for (int i = 1; coeffs.count(fmt::format("cutoff.{}.label", i)); ++i) {
        const std::string k = fmt::format("cutoff.{}", i);
        const double cav = kv_num(coeffs, k + ".c_average");
        const double rel = std::abs(cav - rep.coefficient) / std::abs(rep.coefficient);
        rep.checks.push_back({"c_average_vs_c0." + kv_str(coeffs, k + ".label"), rel,
                              fmt::format("<= {:g}", cfg.fit.cutoff_agreement),
                              rel <= cfg.fit.cutoff_agreement, false});
        if (coeffs.count(k + ".forcing_c")) {
          const double fr =
              std::abs(kv_num(coeffs, k + ".forcing_c") - rep.coefficient) /
              std::abs(rep.coefficient);
          rep.checks.push_back({"forcing_fit_vs_c0." + kv_str(coeffs, k + ".label"), fr,
                                "<= 0.02", fr <= 0.02, false});
        }
      }
      if (meas.count("radiation_limit.ratio")) {
        const double r = kv_num(meas, "radiation_limit.ratio");
        rep.checks.push_back(
            {fmt::format("radiation_limit_t{:g}", kv_num(meas, "radiation_limit.t")), r,
             fmt::format("1 +- {:g}", cfg.fit.radiation_limit_tol),
             std::abs(r - 1) <= cfg.fit.radiation_limit_tol, true});
      } else {
        rep.notes.push_back(fmt::format("run ends before t_* = {:g}; radiation limit not checked",
                                        cfg.fit.radiation_limit_t));
      }
      if (meas.count("profile.sup_error")) {
        const double s = kv_num(meas, "profile.sup_error");
        rep.checks.push_back({"iplus_profile_sup_error", s,
                              fmt::format("< {:g}", cfg.fit.profile_tol),
                              s < cfg.fit.profile_tol, true});
      } else {
        rep.checks.push_back({"iplus_profile_sup_error", kNaN, "probe coverage", false, true});
        rep.notes.push_back(kv_str(meas, "profile.error"));
      }
      if (meas.count("recursion.worst_over_error")) {
        const double w = kv_num(meas, "recursion.worst_over_error");
        rep.checks.push_back({"rad2_recursion_vs_direct_fit", w,
                              "<= 1 error bar on " + kv_str(meas, "recursion.window"),
                              std::isfinite(w) && w <= 1, true});
      }
    } else {
      const double rel = kv_num(coeffs, "cutoff.1.c_average_rel");
      rep.checks.push_back({"c_average_relative", rel,
                            fmt::format("< {:g}", cfg.fit.c_average_rel),
                            rel < cfg.fit.c_average_rel, true});
      if (coeffs.count("cutoff_relative_difference")) {
        const double d = kv_num(coeffs, "cutoff_relative_difference");
        rep.checks.push_back({"dX_cutoff_agreement", d,
                              fmt::format("<= {:g}", cfg.fit.cutoff_agreement),
                              d <= cfg.fit.cutoff_agreement, false});
      }
      const double alt = kv_num(coeffs, "cutoff.1.dX_with_moment");
      for (const auto& pr : rep.probes) {
        const double r = pr.fit.signed_amplitude() / (2 * alt);
        rep.checks.push_back({"ratio_with_first_moment." + pr.fit.probe, r,
                              fmt::format("[{:g}:{:g}]", tol.ratio_lo, tol.ratio_hi),
                              r >= tol.ratio_lo && r <= tol.ratio_hi, false});
      }
    }
    bool ok = true;
    for (const auto& pr : rep.probes) ok = ok && pr.verdict.pass;
    for (const auto& c : rep.checks)
      if (c.required) ok = ok && c.pass;
    rep.status = ok ? "pass" : "fail";

    std::vector<std::string> plots;
    write_plots(run_dir, man, cfg, rep, plots);
    for (const auto& f : plots) man.add_file(run_dir, f);
    return finish(rep);
  });
}

// ---------------------------------------------------------------- orchestration

AsymptoticReport run_pipeline(const RunConfig& cfg, const fs::path& root) {
  const fs::path dir = prepare_run(cfg, root);
  try {
    stage_simulate(dir);
    const auto man = RunManifest::load(dir);
    if (man.stages.at("simulate").rfind("out-of-hypothesis", 0) != 0) {
      stage_radiation(dir);
      stage_coeffs(dir);
      stage_fit(dir);
    }
  } catch (const StageError&) {
    // recorded in the manifest; the report stage turns it into status "error"
  }
  try {
    return stage_report(dir);
  } catch (const StageError& e) {
    AsymptoticReport rep;
    rep.name = cfg.name;
    rep.status = "error";
    rep.notes.push_back(e.what());
    return rep;
  }
}

AsymptoticReport run_pipeline(const fs::path& config_path, const std::optional<fs::path>& out) {
  return run_pipeline(load_config(config_path), output_root(out));
}

std::vector<AsymptoticReport> run_sweep(const RunConfig& base, const std::string& key,
                                        const std::vector<std::string>& values, int jobs,
                                        const fs::path& root) {
  std::vector<RunConfig> cfgs;
  for (const auto& v : values) {
    RunConfig c = with_override(base, key, v);
    c.name = base.name + "_" + sanitize(key + "=" + v);
    cfgs.push_back(std::move(c));
  }
  std::vector<AsymptoticReport> out(cfgs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfgs.size(); i = next++) out[i] = run_pipeline(cfgs[i], root);
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cfgs.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

// ---------------------------------------------------------------- kernels

std::string KernelReport::to_text() const {
  std::string out;
  out += fmt::format("{:>3} {:>7} {:>26} {:>26} {:>10}\n", "k", "t", "d_k",
                     "numeric t^(k+1) F^-1", "rel_err");
  for (const auto& r : rows)
    out += fmt::format("{:>3} {:>7g} {:>12.6g} {:+12.6g}i {:>12.6g} {:+12.6g}i {:>10.3e}\n", r.k,
                       r.t, r.exact.real(), r.exact.imag(), r.numeric.real(), r.numeric.imag(),
                       r.rel_err);
  out += fmt::format("umod_log_coefficient = {:.10g}\n", umod_coefficient);
  out += fmt::format("umod_decay_constant = {:.6g}\n", umod_decay_constant);
  out += fmt::format("bode_max_error = {:.3e}\n", bode_max_error);
  return out;
}

std::string KernelReport::to_csv() const {
  std::string out = "k,t,exact_re,exact_im,numeric_re,numeric_im,rel_err\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{}\n", r.k, g(r.t), g(r.exact.real()),
                       g(r.exact.imag()), g(r.numeric.real()), g(r.numeric.imag()),
                       g(r.rel_err));
  return out;
}

KernelReport run_kernel_checks(const std::vector<int>& ks, double t) {
  KernelReport rep;
  for (int k : ks) {
    KernelRow row;
    row.k = k;
    row.t = t;
    row.exact = tail_kernel(k);
    row.numeric = tail_kernel_numeric(k, t) * std::pow(t, k + 1);
    row.rel_err = std::abs(row.numeric - row.exact) / std::abs(row.exact);
    rep.rows.push_back(row);
  }
  rep.umod_coefficient = umod_log_coefficient(AngularField(SphereGrid::make(0), 1.0));
  rep.umod_decay_constant = 100.0 * std::abs(umod_derivative(100.0));
  // analytic (rho d_rho - 1) u = f cases
  const auto f2 = LogGridFunction::sample(1.0, 1e-6, 1600, [](double r) { return cplx(r * r); });
  const auto f3 =
      LogGridFunction::sample(1.0, 1e-6, 1600, [](double r) { return cplx(r * r * r); });
  const auto u2 = solve_bode(f2, 2.0), u3 = solve_bode(f3, 3.0);
  double err = 0;
  for (int i = 0; i < u2.size(); ++i) {
    const double r = u2.rho[i];
    err = std::max(err, std::abs(u2.value[i] - r * r) / (r * r));
    err = std::max(err, std::abs(u3.value[i] - r * r * r / 2.0) / (r * r * r / 2));
  }
  const auto fe = LogGridFunction::sample(
      200.0, 1e-8, 4000, [](double r) { return cplx(r * r * std::exp(-r)); });
  err = std::max(err, std::abs(bode_leading(fe) - 1.0));
  rep.bode_max_error = err;
  return rep;
}

}  // namespace tailslab
