#pragma once
// Method-of-lines evolution of box_g phi = a phi^p for Phi = r phi on the
// compactified grid s in [0,1], r = 2s/(1-s), plus the exact flat oracle.

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tailslab/geometry.hpp"
#include "tailslab/numerics.hpp"
#include "tailslab/sphere.hpp"

namespace tailslab {

// a(t, r) = amplitude (1 + radial/(1+r)) (1 + temporal/(1+t)).
// The scri value a0(t) drops the radial factor.
struct NonlinearCoefficient {
  double amplitude = 0.0;
  double radial = 0.0;
  double temporal = 0.0;
  double value(double t, double r) const;
  double scri(double t) const;
  double time_factor(double t) const { return 1 + temporal / (1 + t); }
  double radial_factor(double r) const { return 1 + radial / (1 + r); }
  bool active() const { return amplitude != 0.0; }
};

// u0 = c1 /sqrt(1+r^2) + c2 /(1+r^2) + bump0,  u1 = d1 /sqrt(1+r^2) + bump1.
// For angular mode l > 0 each radial factor carries (r^2/(1+r^2))^{l/2}
// (c-terms) or (r/w)^l (bumps) so the data stay smooth at the centre.
struct Bump {
  double amplitude = 0.0;
  double center = 0.0;
  double width = 0.5;
  double operator()(double r, int ell = 0) const;
  double derivative(double r) const;  // l = 0 only
};

struct InitialData {
  AngularField c1, c2, d1;      // expansion factors at scri
  Bump bump0, bump1;            // compact residual pieces
  AngularField pattern0, pattern1;  // angular shape of the bumps
  // Angular fields must share one grid; spherical data use lmax = 0.
  static InitialData spherical(double c1 = 0, double c2 = 0, double d1 = 0, Bump b0 = {},
                               Bump b1 = {});
  std::shared_ptr<const SphereGrid> grid() const { return c1.grid(); }
  bool expanded() const;  // nonzero c1, c2 or d1
  bool is_spherical() const;
  double u0(double r, double theta, double phi) const;
  double u1(double r, double theta, double phi) const;
  // radial profile of harmonic coefficient `mode` (or the value when lmax = 0)
  double u0_mode(double r, int mode) const;
  double u1_mode(double r, int mode) const;
};

enum class Symmetry { spherical, banded };

struct ProblemSpec {
  MetricModel metric;
  int power = 3;
  NonlinearCoefficient coeff;
  InitialData data = InitialData::spherical();
  Symmetry symmetry = Symmetry::spherical;
  int lmax = 0;  // banded runs evolve every (l, m) with l <= lmax
  std::string describe() const;
};

struct GridSpec {
  int n = 400;
  double cfl = 0.5;
  double ko = 0.02;
  double ds() const { return 1.0 / n; }
  double dt() const { return cfl * ds(); }
};

struct OutputPlan {
  std::vector<double> probe_r{1.0, 5.0, 20.0};
  num::Cadence probe_cadence{0.1, 10.0, 1.004, 0.0};
  num::Cadence trace_cadence{0.05, 200.0, 1.002, 0.0};
  num::Cadence snapshot_cadence{0.025, 20.0, 1.01, 0.0};
  int near_scri = 8;  // number of grid points s = 1 - k ds recorded with the trace
  bool snapshots = true;
};

struct BlowupError;

// Right-hand side for one angular mode.
class SemiDiscreteRHS {
 public:
  SemiDiscreteRHS(const ProblemSpec& spec, const GridSpec& grid, int ell);

  int n() const { return n_; }
  int ell() const { return ell_; }
  double ds() const { return ds_; }
  const std::vector<double>& s() const { return s_; }
  const std::vector<double>& r() const { return r_; }

  // Fill the three ghost values f[-1..-3] from parity; f points at index 0
  // of a buffer with three writable slots in front.
  void fill_ghosts(double* f) const;
  // dPhi, dPi over j = 0..n (ghosts of Phi, Pi are filled first).
  void operator()(double t, double* Phi, double* Pi, double* dPhi, double* dPi) const;

  // Optional additive term in dPi (used for manufactured solutions).
  std::function<void(double t, double* dPi)> extra_source;

  // The continuous operator applied to given s-derivatives at grid point j
  // (tests compare the discrete operator against it).
  double continuous_pi_rhs(int j, double Phi, double Phi_s, double Phi_ss, double Pi,
                           double Pi_s) const;

 private:
  int n_, ell_, power_;
  double ds_, sigma_, parity_;
  bool nonlinear_;
  NonlinearCoefficient coeff_;
  std::vector<double> s_, r_, a1_, a0_, b2_, b1_, b0_, nl_;
  double gw_[3][7];
};

SemiDiscreteRHS derive_system(const ProblemSpec& spec, const GridSpec& grid, int ell = 0);

// Field state for one mode with ghost padding.
struct ModeState {
  static constexpr int kGhost = 3;
  int ell = 0, m = 0;
  std::vector<double> phi_buf, pi_buf;  // size n + 1 + kGhost
  explicit ModeState(int n = 0, int ell_ = 0, int m_ = 0)
      : ell(ell_), m(m_), phi_buf(n + 1 + kGhost, 0.0), pi_buf(n + 1 + kGhost, 0.0) {}
  double* Phi() { return phi_buf.data() + kGhost; }
  double* Pi() { return pi_buf.data() + kGhost; }
  const double* Phi() const { return phi_buf.data() + kGhost; }
  const double* Pi() const { return pi_buf.data() + kGhost; }
};

struct EvolutionState {
  double t_star = 0.0;
  std::vector<ModeState> modes;
};

// Classical RK4 update of every mode; throws BlowupError on non-finite values.
class Stepper {
 public:
  explicit Stepper(int n);
  void step(ModeState& st, const SemiDiscreteRHS& rhs, double t, double dt);

 private:
  int n_;
  ModeState k_[4], tmp_;
};

EvolutionState step(const EvolutionState& state, const std::vector<SemiDiscreteRHS>& rhs,
                    double dt);

struct Trajectory {
  ProblemSpec spec;
  GridSpec grid;
  double t_final = 0;
  std::string spec_hash;
  std::string status = "completed";  // or "blowup"
  double blowup_time = -1;
  bool spherical = true;
  std::vector<std::pair<int, int>> modes;  // (l, m) of each evolved component
  std::shared_ptr<const SphereGrid> sphere;  // nodal reconstruction grid

  // snapshots: [time][mode][j]
  std::vector<double> snap_t;
  std::vector<std::vector<std::vector<double>>> snap_phi, snap_pi;

  // near-scri record: [time][mode][k], k = 0 is s = 1
  std::vector<double> near_t;
  std::vector<std::vector<std::vector<double>>> near_phi;
  std::vector<std::vector<double>> near_pi;  // Pi at s = 1, [time][mode]

  // probes: [time][probe][node]
  std::vector<double> probe_r;
  std::vector<double> probe_t;
  std::vector<std::vector<std::vector<double>>> probe_phi, probe_dphi;

  // monitors
  std::vector<double> mon_t, energy, apriori;

  // nodal value from per-mode values
  double nodal(const std::vector<double>& per_mode, int node) const;
  int nodes() const { return sphere->nodes(); }
  double s_of(int j) const { return static_cast<double>(j) / grid.n; }
};

struct BlowupError : std::runtime_error {
  BlowupError(double t, std::shared_ptr<Trajectory> partial_);
  double time;
  std::shared_ptr<Trajectory> partial;
};

struct EvolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Trajectory evolve(const ProblemSpec& spec, const GridSpec& grid, double t_final,
                  const OutputPlan& plan = {});

// Initial state at t_* = 0.
EvolutionState initial_state(const ProblemSpec& spec, const GridSpec& grid);

// Exact linear flat spherically symmetric solution phi(t_*, r) (r = inf gives
// the radiation field r phi at scri).
double flat_exact_oracle(const InitialData& data, double t_star, double r);

// Stable hash of the problem and grid (hex digest).
std::string spec_hash(const ProblemSpec& spec, const GridSpec& grid, double t_final);

}  // namespace tailslab
