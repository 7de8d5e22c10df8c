#include "tailslab/evolution.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace tailslab {

double NonlinearCoefficient::value(double t, double r) const {
  return amplitude * radial_factor(r) * time_factor(t);
}
double NonlinearCoefficient::scri(double t) const { return amplitude * time_factor(t); }

namespace {
double gauss(double x, double w) { return std::exp(-(x * x) / (w * w)); }
}  // namespace

// Even combination so that r * bump is odd in r at the centre.
double Bump::operator()(double r, int ell) const {
  if (amplitude == 0) return 0;
  const double norm = 1 + gauss(2 * center, width);
  double v = amplitude * (gauss(r - center, width) + gauss(r + center, width)) / norm;
  if (ell > 0) v *= std::pow(r / width, ell);
  return v;
}

double Bump::derivative(double r) const {
  if (amplitude == 0) return 0;
  const double norm = 1 + gauss(2 * center, width);
  const double w2 = width * width;
  return amplitude *
         (-2 * (r - center) / w2 * gauss(r - center, width) -
          2 * (r + center) / w2 * gauss(r + center, width)) /
         norm;
}

InitialData InitialData::spherical(double c1, double c2, double d1, Bump b0, Bump b1) {
  auto g = SphereGrid::make(0);
  InitialData d;
  d.c1 = AngularField(g, c1);
  d.c2 = AngularField(g, c2);
  d.d1 = AngularField(g, d1);
  d.bump0 = b0;
  d.bump1 = b1;
  d.pattern0 = AngularField(g, 1.0);
  d.pattern1 = AngularField(g, 1.0);
  return d;
}

bool InitialData::expanded() const {
  return c1.max_abs() > 0 || c2.max_abs() > 0 || d1.max_abs() > 0;
}

bool InitialData::is_spherical() const {
  return c1.is_constant() && c2.is_constant() && d1.is_constant() && pattern0.is_constant() &&
         pattern1.is_constant();
}

namespace {
double c_factor(double r, int ell) {
  if (ell == 0) return 1.0;
  return std::pow(r * r / (1 + r * r), 0.5 * ell);
}
double coef_or_value(const AngularField& f, int mode) {
  if (f.grid()->lmax() == 0) return mode == 0 ? f[0] : 0.0;
  const auto c = f.coefficients();
  return mode < static_cast<int>(c.size()) ? c[mode] : 0.0;
}
}  // namespace

double InitialData::u0_mode(double r, int mode) const {
  int ell, m;
  SphereGrid::mode_of(mode, ell, m);
  const double a = coef_or_value(c1, mode), b = coef_or_value(c2, mode);
  const double p = coef_or_value(pattern0, mode);
  return c_factor(r, ell) * (a / std::sqrt(1 + r * r) + b / (1 + r * r)) + p * bump0(r, ell);
}

double InitialData::u1_mode(double r, int mode) const {
  int ell, m;
  SphereGrid::mode_of(mode, ell, m);
  const double a = coef_or_value(d1, mode);
  const double p = coef_or_value(pattern1, mode);
  return c_factor(r, ell) * a / std::sqrt(1 + r * r) + p * bump1(r, ell);
}

double InitialData::u0(double r, double theta, double phi) const {
  if (grid()->lmax() == 0) return u0_mode(r, 0);
  double acc = 0;
  for (int mode = 0; mode < grid()->nmodes(); ++mode) {
    int ell, m;
    SphereGrid::mode_of(mode, ell, m);
    acc += u0_mode(r, mode) * real_ylm(ell, m, theta, phi);
  }
  return acc;
}

double InitialData::u1(double r, double theta, double phi) const {
  if (grid()->lmax() == 0) return u1_mode(r, 0);
  double acc = 0;
  for (int mode = 0; mode < grid()->nmodes(); ++mode) {
    int ell, m;
    SphereGrid::mode_of(mode, ell, m);
    acc += u1_mode(r, mode) * real_ylm(ell, m, theta, phi);
  }
  return acc;
}

std::string ProblemSpec::describe() const {
  auto field = [](const AngularField& f) {
    std::string s = fmt::format("[l{}", f.grid()->lmax());
    for (double v : f.values()) s += fmt::format(" {:.17g}", v);
    return s + "]";
  };
  auto bump = [](const Bump& b) {
    return fmt::format("(amp {:.17g} center {:.17g} width {:.17g})", b.amplitude, b.center,
                       b.width);
  };
  return fmt::format(
      "metric {} mass {:.17g} height_scale {:.17g} height_slope {:.17g}\n"
      "power {} coeff amp {:.17g} radial {:.17g} temporal {:.17g}\n"
      "symmetry {} lmax {}\n"
      "c1 {} c2 {} d1 {}\nbump0 {} pattern0 {}\nbump1 {} pattern1 {}\n",
      to_string(metric.kind), metric.mass, metric.height.scale, metric.height.slope, power,
      coeff.amplitude, coeff.radial, coeff.temporal,
      symmetry == Symmetry::spherical ? "spherical" : "banded", lmax, field(data.c1),
      field(data.c2), field(data.d1), bump(data.bump0), field(data.pattern0),
      bump(data.bump1), field(data.pattern1));
}

std::string spec_hash(const ProblemSpec& spec, const GridSpec& grid, double t_final) {
  return num::sha256_hex(spec.describe() +
                         fmt::format("grid n {} cfl {:.17g} ko {:.17g} T {:.17g}\n", grid.n,
                                     grid.cfl, grid.ko, t_final));
}

// ---------------------------------------------------------------------------

SemiDiscreteRHS::SemiDiscreteRHS(const ProblemSpec& spec, const GridSpec& grid, int ell)
    : n_(grid.n), ell_(ell), power_(spec.power), ds_(grid.ds()), sigma_(grid.ko),
      coeff_(spec.coeff) {
  if (!spec.metric.evolvable())
    throw EvolutionError("normal_form models are operator fixtures and cannot be evolved");
  if (spec.symmetry == Symmetry::banded && spec.coeff.active())
    throw EvolutionError(
        "banded symmetry supports only linear runs; nonlinear runs must be spherical");
  if (spec.power < 2) throw EvolutionError("power must be >= 2");
  if (n_ < 16) throw EvolutionError("grid needs at least 16 intervals");
  nonlinear_ = spec.coeff.active();
  parity_ = (ell % 2 == 0) ? -1.0 : 1.0;  // Phi = r phi_l has parity (-1)^{l+1}

  const auto& g = spec.metric;
  const double c = g.height.scale, c2 = c * c;
  const double L = ell * (ell + 1.0);
  const int p = spec.power;
  s_.resize(n_ + 1);
  r_.resize(n_ + 1);
  a1_.assign(n_ + 1, 0.0);
  a0_ = b2_ = b1_ = b0_ = nl_ = a1_;
  for (int j = 0; j <= n_; ++j) {
    const double s = static_cast<double>(j) / n_;
    s_[j] = s;
    if (j == 0) {
      r_[j] = 0;
      continue;
    }
    if (j == n_) {
      r_[j] = std::numeric_limits<double>::infinity();
      a1_[j] = -4 / c2;
      b0_[j] = -L / c2;
      nl_[j] = (p == 3 ? 1 / c2 : 0.0) * spec.coeff.amplitude;
      continue;
    }
    const double r = r_of_s(s), rho = 1 / r;
    r_[j] = r;
    const double A = g.A(r), Ap = g.dA_dr(r);
    const double Q2 = 4 * s * s + c2 * (1 - s) * (1 - s);
    const double sq = std::sqrt(Q2);
    a1_[j] = -A * 2 * s * sq / c2;
    a0_[j] = -A * (1 - s) / sq;
    b2_[j] = A * A * Q2 * (1 - s) * (1 - s) / (4 * c2);
    b1_[j] = (A * Q2 / (2 * c2)) * (-A * (1 - s) + Ap);
    b0_[j] = -A * (1 + c2 * rho * rho) * (L + r * Ap) / c2;
    const double w = (r >= 1) ? A * (1 + c2 * rho * rho) * std::pow(rho, p - 3) / c2
                              : A * (r * r + c2) * std::pow(r, 1 - p) / c2;
    nl_[j] = w * spec.coeff.amplitude * spec.coeff.radial_factor(r);
  }
  double nodes[7];
  for (int i = 0; i < 7; ++i) nodes[i] = i;
  for (int j = 1; j <= 3; ++j) {
    const double sp = j / (1 + 2 * j * ds_);  // mirror point in units of ds
    num::lagrange_weights(nodes, 7, sp, gw_[j - 1]);
  }
}

SemiDiscreteRHS derive_system(const ProblemSpec& spec, const GridSpec& grid, int ell) {
  return SemiDiscreteRHS(spec, grid, ell);
}

void SemiDiscreteRHS::fill_ghosts(double* f) const {
  for (int j = 1; j <= 3; ++j) {
    double acc = 0;
    for (int i = 0; i < 7; ++i) acc += gw_[j - 1][i] * f[i];
    f[-j] = parity_ * acc;
  }
}

double SemiDiscreteRHS::continuous_pi_rhs(int j, double Phi, double Phi_s, double Phi_ss,
                                          double Pi, double Pi_s) const {
  return a1_[j] * Pi_s + a0_[j] * Pi + b2_[j] * Phi_ss + b1_[j] * Phi_s + b0_[j] * Phi;
}

namespace {
// Centred 4th-order update with 6th-order dissipation over j in [j0, j1].
__attribute__((noinline)) void interior_kernel(
    long j0, long j1, const double* __restrict f, const double* __restrict v,
    const double* __restrict a1, const double* __restrict a0, const double* __restrict b2,
    const double* __restrict b1, const double* __restrict b0, double i12h, double i12h2,
    double ko, double* __restrict df, double* __restrict dv) {
#pragma GCC ivdep
  for (long j = j0; j <= j1; ++j) {
    const double fm3 = f[j - 3], fm2 = f[j - 2], fm1 = f[j - 1], f0 = f[j], fp1 = f[j + 1],
                 fp2 = f[j + 2], fp3 = f[j + 3];
    const double vm3 = v[j - 3], vm2 = v[j - 2], vm1 = v[j - 1], v0 = v[j], vp1 = v[j + 1],
                 vp2 = v[j + 2], vp3 = v[j + 3];
    const double d1v = (vm2 - 8 * vm1 + 8 * vp1 - vp2) * i12h;
    const double d1f = (fm2 - 8 * fm1 + 8 * fp1 - fp2) * i12h;
    const double d2f = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) * i12h2;
    const double kof = (fm3 - 6 * fm2 + 15 * fm1 - 20 * f0 + 15 * fp1 - 6 * fp2 + fp3) * ko;
    const double kov = (vm3 - 6 * vm2 + 15 * vm1 - 20 * v0 + 15 * vp1 - 6 * vp2 + vp3) * ko;
    df[j] = v0 + kof;
    dv[j] = a1[j] * d1v + a0[j] * v0 + b2[j] * d2f + b1[j] * d1f + b0[j] * f0 + kov;
  }
}
}  // namespace

void SemiDiscreteRHS::operator()(double t, double* Phi, double* Pi, double* dPhi,
                                 double* dPi) const {
  fill_ghosts(Phi);
  fill_ghosts(Pi);
  const int N = n_;
  const double h = ds_;
  const double i12h = 1 / (12 * h), i12h2 = 1 / (12 * h * h), ko = sigma_ / (64 * h);
  const double* __restrict a1 = a1_.data();
  const double* __restrict a0 = a0_.data();
  const double* __restrict b2 = b2_.data();
  const double* __restrict b1 = b1_.data();
  const double* __restrict b0 = b0_.data();
  const double* __restrict nl = nl_.data();
  const double* __restrict f = Phi;
  const double* __restrict v = Pi;
  double* __restrict df = dPhi;
  double* __restrict dv = dPi;
  const double tf = nonlinear_ ? coeff_.time_factor(t) : 0.0;

  interior_kernel(1, N - 3, f, v, a1, a0, b2, b1, b0, i12h, i12h2, ko, df, dv);
  {  // j = N - 2: centred derivatives, no dissipation
    const int j = N - 2;
    const double d1v = (v[j - 2] - 8 * v[j - 1] + 8 * v[j + 1] - v[j + 2]) * i12h;
    const double d1f = (f[j - 2] - 8 * f[j - 1] + 8 * f[j + 1] - f[j + 2]) * i12h;
    const double d2f =
        (-f[j - 2] + 16 * f[j - 1] - 30 * f[j] + 16 * f[j + 1] - f[j + 2]) * i12h2;
    df[j] = v[j];
    dv[j] = a1[j] * d1v + a0[j] * v[j] + b2[j] * d2f + b1[j] * d1f + b0[j] * f[j];
  }
  {
    const int j = N - 1;
    const double d1v = (3 * v[N] + 10 * v[N - 1] - 18 * v[N - 2] + 6 * v[N - 3] - v[N - 4]) * i12h;
    const double d1f = (3 * f[N] + 10 * f[N - 1] - 18 * f[N - 2] + 6 * f[N - 3] - f[N - 4]) * i12h;
    const double d2f = (10 * f[N] - 15 * f[N - 1] - 4 * f[N - 2] + 14 * f[N - 3] -
                        6 * f[N - 4] + f[N - 5]) * i12h2;
    df[j] = v[j];
    dv[j] = a1[j] * d1v + a0[j] * v[j] + b2[j] * d2f + b1[j] * d1f + b0[j] * f[j];
  }
  {
    const int j = N;
    const double d1v =
        (25 * v[N] - 48 * v[N - 1] + 36 * v[N - 2] - 16 * v[N - 3] + 3 * v[N - 4]) * i12h;
    // b2 = b1 = a0 = 0 at scri
    df[j] = v[j];
    dv[j] = a1[j] * d1v + b0[j] * f[j];
  }
  if (nonlinear_) {
    for (int j = 1; j <= N; ++j) {
      const double x = f[j];
      double xp = x * x * x;
      for (int k = 3; k < power_; ++k) xp *= x;
      if (power_ == 2) xp = x * x;
      dv[j] += nl[j] * tf * xp;
    }
  }
  df[0] = 0;
  dv[0] = 0;
  if (extra_source) extra_source(t, dv);
}

// ---------------------------------------------------------------------------

namespace {
struct StepBlowup {
  double t;
};
}  // namespace

Stepper::Stepper(int n)
    : n_(n), k_{ModeState(n), ModeState(n), ModeState(n), ModeState(n)}, tmp_(n) {}

void Stepper::step(ModeState& st, const SemiDiscreteRHS& rhs, double t, double dt) {
  const int m = n_ + 1;
  double* f = st.Phi();
  double* v = st.Pi();
  double* tf = tmp_.Phi();
  double* tv = tmp_.Pi();
  rhs(t, f, v, k_[0].Phi(), k_[0].Pi());
  for (int j = 0; j < m; ++j) tf[j] = f[j] + 0.5 * dt * k_[0].Phi()[j], tv[j] = v[j] + 0.5 * dt * k_[0].Pi()[j];
  rhs(t + 0.5 * dt, tf, tv, k_[1].Phi(), k_[1].Pi());
  for (int j = 0; j < m; ++j) tf[j] = f[j] + 0.5 * dt * k_[1].Phi()[j], tv[j] = v[j] + 0.5 * dt * k_[1].Pi()[j];
  rhs(t + 0.5 * dt, tf, tv, k_[2].Phi(), k_[2].Pi());
  for (int j = 0; j < m; ++j) tf[j] = f[j] + dt * k_[2].Phi()[j], tv[j] = v[j] + dt * k_[2].Pi()[j];
  rhs(t + dt, tf, tv, k_[3].Phi(), k_[3].Pi());
  const double c = dt / 6;
  double sum = 0;
  for (int j = 0; j < m; ++j) {
    f[j] += c * (k_[0].Phi()[j] + 2 * k_[1].Phi()[j] + 2 * k_[2].Phi()[j] + k_[3].Phi()[j]);
    v[j] += c * (k_[0].Pi()[j] + 2 * k_[1].Pi()[j] + 2 * k_[2].Pi()[j] + k_[3].Pi()[j]);
    sum += std::abs(f[j]) + std::abs(v[j]);
  }
  if (!std::isfinite(sum) || sum > 1e150) throw StepBlowup{t + dt};
}

EvolutionState step(const EvolutionState& state, const std::vector<SemiDiscreteRHS>& rhs,
                    double dt) {
  if (rhs.size() != state.modes.size())
    throw std::invalid_argument("step: one right-hand side per mode required");
  EvolutionState out = state;
  for (std::size_t i = 0; i < out.modes.size(); ++i) {
    Stepper st(rhs[i].n());
    try {
      st.step(out.modes[i], rhs[i], state.t_star, dt);
    } catch (const StepBlowup& b) {
      throw BlowupError(b.t, nullptr);
    }
  }
  out.t_star = state.t_star + dt;
  return out;
}

BlowupError::BlowupError(double t, std::shared_ptr<Trajectory> partial_)
    : std::runtime_error(fmt::format("solution blew up (non-finite values) at t_* = {:.6g}", t)),
      time(t), partial(std::move(partial_)) {}

// ---------------------------------------------------------------------------

double Trajectory::nodal(const std::vector<double>& per_mode, int node) const {
  if (spherical) return per_mode[0];
  double acc = 0;
  for (std::size_t i = 0; i < modes.size(); ++i)
    acc += per_mode[i] *
           sphere->ylm(SphereGrid::mode_index(modes[i].first, modes[i].second), node);
  return acc;
}

namespace {

std::vector<std::pair<int, int>> active_modes(const ProblemSpec& spec) {
  std::vector<std::pair<int, int>> out;
  if (spec.symmetry == Symmetry::spherical) return {{0, 0}};
  const int dl = spec.data.grid()->lmax();
  for (int mode = 0; mode < (spec.lmax + 1) * (spec.lmax + 1); ++mode) {
    int ell, m;
    SphereGrid::mode_of(mode, ell, m);
    if (ell > dl) break;
    bool nonzero = false;
    for (int j = 1; j <= 64 && !nonzero; ++j) {
      const double r = r_of_s(j / 65.0);
      nonzero = spec.data.u0_mode(r, mode) != 0 || spec.data.u1_mode(r, mode) != 0;
    }
    if (nonzero) out.emplace_back(ell, m);
  }
  if (out.empty()) out.emplace_back(0, 0);
  return out;
}

}  // namespace

EvolutionState initial_state(const ProblemSpec& spec, const GridSpec& grid) {
  if (spec.symmetry == Symmetry::spherical && !spec.data.is_spherical())
    throw EvolutionError("spherical runs need angularly constant data");
  EvolutionState st;
  st.t_star = 0;
  const int n = grid.n;
  for (auto [ell, m] : active_modes(spec)) {
    ModeState ms(n, ell, m);
    const int mode = SphereGrid::mode_index(ell, m);
    for (int j = 1; j <= n; ++j) {
      const double s = static_cast<double>(j) / n;
      if (j < n) {
        const double r = r_of_s(s);
        ms.Phi()[j] = r * spec.data.u0_mode(r, mode);
        ms.Pi()[j] = r * spec.data.u1_mode(r, mode);
      } else {
        // r u -> the rho^1 factor at scri
        const double a = coef_or_value(spec.data.c1, mode);
        const double d = coef_or_value(spec.data.d1, mode);
        ms.Phi()[j] = a;
        ms.Pi()[j] = d;
      }
    }
    st.modes.push_back(std::move(ms));
  }
  return st;
}

namespace {

// Hyperboloidal energy of one component on the s grid.
double mode_energy(const MetricModel& metric, const SemiDiscreteRHS& rhs, const double* Phi,
                   const double* Pi) {
  const int n = rhs.n();
  const double h = rhs.ds();
  const double L = rhs.ell() * (rhs.ell() + 1.0);
  std::vector<double> e(n + 1), s(n + 1);
  for (int j = 0; j <= n; ++j) s[j] = static_cast<double>(j) / n;
  for (int j = 1; j <= n; ++j) {
    const double sj = s[j];
    double fs;
    if (j <= n - 1)
      fs = (j >= 2 && j <= n - 2)
               ? (Phi[j - 2] - 8 * Phi[j - 1] + 8 * Phi[j + 1] - Phi[j + 2]) / (12 * h)
               : (Phi[j + 1] - Phi[j - 1]) / (2 * h);
    else
      fs = (3 * Phi[n] - 4 * Phi[n - 1] + Phi[n - 2]) / (2 * h);
    const double rho = (1 - sj) / (2 * sj);
    const double A = (j < n) ? metric.A(r_of_s(sj)) : 1.0;
    const double W = -metric.g00_over_rho2(rho) / (2 * sj * sj);
    const double grad = (1 - sj) * fs - Phi[j] / sj;
    e[j] = 0.5 * W * Pi[j] * Pi[j] + 0.25 * A * grad * grad + L * Phi[j] * Phi[j] / (4 * sj * sj);
  }
  e[0] = 3 * e[1] - 3 * e[2] + e[3];
  return num::integral(s, e);
}

struct Recorder {
  const ProblemSpec& spec;
  const GridSpec& grid;
  const OutputPlan& plan;
  Trajectory& traj;
  const std::vector<const SemiDiscreteRHS*>& rhs;
  double next_probe = 0, next_trace = 0, next_snap = 0;
  std::vector<double> probe_s;

  void probes(double t, const EvolutionState& st) {
    const int n = grid.n;
    const int nodes = traj.nodes();
    std::vector<std::vector<double>> ph(probe_s.size(), std::vector<double>(nodes));
    auto dph = ph;
    std::vector<double> mphi(st.modes.size()), mpi(st.modes.size());
    for (std::size_t p = 0; p < probe_s.size(); ++p) {
      const double r = traj.probe_r[p];
      for (std::size_t i = 0; i < st.modes.size(); ++i) {
        mphi[i] = num::interp_uniform(st.modes[i].Phi(), n + 1, 0.0, 1.0 / n, probe_s[p], 6) / r;
        mpi[i] = num::interp_uniform(st.modes[i].Pi(), n + 1, 0.0, 1.0 / n, probe_s[p], 6) / r;
      }
      for (int k = 0; k < nodes; ++k) {
        ph[p][k] = traj.nodal(mphi, k);
        dph[p][k] = traj.nodal(mpi, k);
      }
    }
    traj.probe_t.push_back(t);
    traj.probe_phi.push_back(std::move(ph));
    traj.probe_dphi.push_back(std::move(dph));
    monitors(t, st);
  }

  void monitors(double t, const EvolutionState& st) {
    const int n = grid.n;
    double E = 0;
    for (std::size_t i = 0; i < st.modes.size(); ++i)
      E += mode_energy(spec.metric, *rhs[i], st.modes[i].Phi(), st.modes[i].Pi());
    if (traj.spherical) E *= 4 * std::numbers::pi;
    const double q = std::min(2.0, spec.power - 2.0);
    const double bt = std::pow(1 + t * t, 0.5 * q);
    double sup = 0;
    std::vector<double> vals(st.modes.size());
    for (int j = 1; j <= n; ++j) {
      for (std::size_t i = 0; i < st.modes.size(); ++i) vals[i] = st.modes[i].Phi()[j];
      double w;
      if (j < n) {
        const double r = r_of_s(static_cast<double>(j) / n);
        const double x = t + 2 * r;
        w = std::sqrt(1 + x * x) / r;
      } else {
        w = 2.0;  // |phi| <t+2r> -> 2 |Phi| at scri
      }
      for (int k = 0; k < traj.nodes(); ++k) sup = std::max(sup, std::abs(traj.nodal(vals, k)) * w);
    }
    traj.mon_t.push_back(t);
    traj.energy.push_back(E);
    traj.apriori.push_back(sup * bt);
  }

  void trace(double t, const EvolutionState& st) {
    const int n = grid.n;
    const int K = plan.near_scri;
    std::vector<std::vector<double>> rec(st.modes.size(), std::vector<double>(K));
    std::vector<double> pis(st.modes.size());
    for (std::size_t i = 0; i < st.modes.size(); ++i) {
      for (int k = 0; k < K; ++k) rec[i][k] = st.modes[i].Phi()[n - k];
      pis[i] = st.modes[i].Pi()[n];
    }
    traj.near_t.push_back(t);
    traj.near_phi.push_back(std::move(rec));
    traj.near_pi.push_back(std::move(pis));
  }

  void snapshot(double t, const EvolutionState& st) {
    const int n = grid.n;
    std::vector<std::vector<double>> a(st.modes.size()), b(st.modes.size());
    for (std::size_t i = 0; i < st.modes.size(); ++i) {
      a[i].assign(st.modes[i].Phi(), st.modes[i].Phi() + n + 1);
      b[i].assign(st.modes[i].Pi(), st.modes[i].Pi() + n + 1);
    }
    traj.snap_t.push_back(t);
    traj.snap_phi.push_back(std::move(a));
    traj.snap_pi.push_back(std::move(b));
  }

  void maybe(double t, const EvolutionState& st, double tol, bool force) {
    if (force || t >= next_probe - tol) {
      probes(t, st);
      next_probe = plan.probe_cadence.next_after(t);
    }
    if (force || t >= next_trace - tol) {
      trace(t, st);
      next_trace = plan.trace_cadence.next_after(t);
    }
    if (plan.snapshots && (force || t >= next_snap - tol)) {
      snapshot(t, st);
      next_snap = plan.snapshot_cadence.next_after(t);
    }
  }
};

}  // namespace

Trajectory evolve(const ProblemSpec& spec, const GridSpec& grid, double t_final,
                  const OutputPlan& plan) {
  if (!(t_final > 0)) throw EvolutionError("T_final must be positive");
  if (!(grid.cfl > 0) || grid.cfl > 1.0) throw EvolutionError("cfl must lie in (0, 1]");
  if (plan.near_scri < 1 || plan.near_scri > grid.n / 4)
    throw EvolutionError("near_scri count out of range");
  auto traj = std::make_shared<Trajectory>();
  traj->spec = spec;
  traj->grid = grid;
  traj->t_final = t_final;
  traj->spec_hash = spec_hash(spec, grid, t_final);
  traj->spherical = spec.symmetry == Symmetry::spherical;
  traj->sphere = SphereGrid::make(traj->spherical ? 0 : spec.lmax);

  EvolutionState st = initial_state(spec, grid);
  std::map<int, std::unique_ptr<SemiDiscreteRHS>> by_ell;
  std::vector<const SemiDiscreteRHS*> rhs;
  for (const auto& ms : st.modes) {
    traj->modes.emplace_back(ms.ell, ms.m);
    if (!by_ell.count(ms.ell))
      by_ell[ms.ell] = std::make_unique<SemiDiscreteRHS>(spec, grid, ms.ell);
    rhs.push_back(by_ell[ms.ell].get());
  }
  for (double r : plan.probe_r)
    if (!(r > 0)) throw EvolutionError("probe radii must be positive");
  traj->probe_r = plan.probe_r;

  Recorder rec{spec, grid, plan, *traj, rhs, 0, 0, 0, {}};
  for (double r : plan.probe_r) rec.probe_s.push_back(s_of_r(r));

  const double dt0 = grid.dt();
  const long nsteps = static_cast<long>(std::ceil(t_final / dt0 - 1e-9));
  const double dt = t_final / nsteps;
  Stepper stepper(grid.n);
  rec.maybe(0.0, st, 0.5 * dt, true);
  for (long k = 0; k < nsteps; ++k) {
    const double t = k * dt;
    try {
      for (std::size_t i = 0; i < st.modes.size(); ++i) stepper.step(st.modes[i], *rhs[i], t, dt);
    } catch (const StepBlowup& b) {
      traj->status = "blowup";
      traj->blowup_time = b.t;
      throw BlowupError(b.t, traj);
    }
    const double tn = (k + 1) * dt;
    st.t_star = tn;
    rec.maybe(tn, st, 0.5 * dt, k + 1 == nsteps);
  }
  return std::move(*traj);
}

// ---------------------------------------------------------------------------
// Flat d'Alembert oracle. With F = r phi, F = P(t + r) + M(t - r) in Minkowski
// time t = t_* + h(r); P and M are fixed by the data on {t_* = 0}.

namespace {

struct OracleData {
  const InitialData& d;
  double U1(double r) const {  // d/dr (r u0)
    const double c1 = d.c1[0], c2 = d.c2[0];
    const double q = 1 + r * r;
    double v = c1 / (q * std::sqrt(q)) + c2 * (1 - r * r) / (q * q);
    v += d.pattern0[0] * (d.bump0(r) + r * d.bump0.derivative(r));
    return v;
  }
  double V(double r) const { return r * d.u1(r, 0, 0); }
  static double hp(double r) { return r / std::sqrt(1 + r * r); }
};

// Adaptive quadrature with an absolute floor: the data tails underflow, so a
// purely relative tolerance never terminates on the empty part of the range.
double integrate(const std::function<double(double)>& f, double a, double b) {
  if (b <= a) return 0;
  gsl_function gf;
  gf.function = [](double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); };
  gf.params = const_cast<std::function<double(double)>*>(&f);
  constexpr std::size_t kLimit = 2000;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(kLimit);
  gsl_error_handler_t* old = gsl_set_error_handler_off();
  double val = 0, err = 0;
  if (std::isinf(b))
    gsl_integration_qagiu(&gf, a, 1e-14, 1e-12, kLimit, ws, &val, &err);
  else
    gsl_integration_qag(&gf, a, b, 1e-14, 1e-12, kLimit, GSL_INTEG_GAUSS61, ws, &val, &err);
  gsl_set_error_handler(old);
  gsl_integration_workspace_free(ws);
  return val;
}

}  // namespace

double flat_exact_oracle(const InitialData& data, double t_star, double r) {
  if (!data.is_spherical()) throw EvolutionError("flat_exact_oracle needs spherical data");
  OracleData od{data};
  auto P = [&](double xi) {
    const double y = xi + 1;
    const double R = std::isinf(xi) ? std::numeric_limits<double>::infinity()
                                    : (y * y - 1) / (2 * y);
    return integrate(
        [&](double x) { return 0.5 * (od.V(x) / (1 + x * x) + od.U1(x) * (1 + OracleData::hp(x))); },
        0.0, R);
  };
  auto M = [&](double xi) {
    if (xi > 0) return -P(xi);
    const double y = xi + 1;
    const double R = (1 - y * y) / (2 * y);
    return integrate(
        [&](double x) {
          return 0.5 * (-od.V(x) / (1 + x * x) + od.U1(x) * (1 - OracleData::hp(x)));
        },
        0.0, R);
  };
  if (std::isinf(r)) return P(std::numeric_limits<double>::infinity()) + M(t_star - 1);
  if (r <= 0) r = 1e-7;
  const double h = std::sqrt(1 + r * r) - 1;
  const double F = P(t_star + h + r) + M(t_star + h - r);
  return F / r;
}

}  // namespace tailslab
