#include "tailslab/coefficients.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "tailslab/numerics.hpp"

namespace tailslab {

CutoffSpec::CutoffSpec(double a, double b) : t0(a), t1(b) {
  if (!(a > 0) || !(b > a))
    throw CoefficientError(fmt::format("cutoff needs 0 < t0 < t1, got {}:{}", a, b));
}

double CutoffSpec::chi(double t) const { return num::smoothstep7((t - t0) / (t1 - t0)); }
double CutoffSpec::dchi(double t) const {
  const double w = t1 - t0;
  return num::smoothstep7_d1((t - t0) / w) / w;
}
double CutoffSpec::d2chi(double t) const {
  const double w = t1 - t0;
  return num::smoothstep7_d2((t - t0) / w) / (w * w);
}
std::string CutoffSpec::label() const { return fmt::format("{:g}:{:g}", t0, t1); }

CutoffSpec parse_cutoff(const std::string& text) {
  const auto c = text.find(':');
  if (c == std::string::npos) throw CoefficientError("cutoff must look like t0:t1, got '" + text + "'");
  try {
    std::size_t p1 = 0, p2 = 0;
    const std::string a = text.substr(0, c), b = text.substr(c + 1);
    const double t0 = std::stod(a, &p1), t1 = std::stod(b, &p2);
    if (p1 != a.size() || p2 != b.size()) throw std::invalid_argument("trailing");
    return CutoffSpec(t0, t1);
  } catch (const std::invalid_argument&) {
    throw CoefficientError("cutoff must look like t0:t1, got '" + text + "'");
  }
}

double sphere_average(const AngularField& g) { return g.average(); }

namespace {

using GaussRule = num::QuadRule;

GaussRule gauss_rule(double a, double b) { return num::gauss_legendre(a, b, 16, 8); }

AngularField resample(const AngularField& f, const std::shared_ptr<const SphereGrid>& g) {
  if (f.grid() == g || f.grid()->nodes() == g->nodes()) return AngularField(g, f.values());
  const auto coef = f.coefficients();
  std::vector<double> c(g->nmodes(), 0.0);
  for (std::size_t i = 0; i < coef.size() && i < c.size(); ++i) c[i] = coef[i];
  return AngularField::from_coefficients(g, c);
}

void require_coverage(const RadiationSeries& s, const CutoffSpec& cut) {
  if (s.size() < 8) throw CoefficientError("radiation series too short");
  if (s.times.front() > cut.t0 || s.times.back() < cut.t1)
    throw CoefficientError(fmt::format("series [{:g}, {:g}] does not cover cutoff window {}",
                                       s.times.front(), s.times.back(), cut.label()));
}

// int w(t) f(t) dt over the cutoff window for sampled f, w = chi' or chi''.
double window_integral(const std::vector<double>& t, const std::vector<double>& f,
                       const CutoffSpec& cut, bool second) {
  static thread_local std::pair<double, double> key{-1, -1};
  static thread_local GaussRule rule;
  if (key.first != cut.t0 || key.second != cut.t1) {
    rule = gauss_rule(cut.t0, cut.t1);
    key = {cut.t0, cut.t1};
  }
  double acc = 0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    const double w = second ? cut.d2chi(rule.x[i]) : cut.dchi(rule.x[i]);
    acc += rule.w[i] * w * num::interp_grid(t, f, rule.x[i], 6);
  }
  return acc;
}

// int chi(t) g(t) dt from t0 to the last sample.
double chi_integral(const std::vector<double>& t, const std::vector<double>& g,
                    const CutoffSpec& cut) {
  const auto rule = gauss_rule(cut.t0, cut.t1);
  double acc = 0;
  for (std::size_t i = 0; i < rule.x.size(); ++i)
    acc += rule.w[i] * cut.chi(rule.x[i]) * num::interp_grid(t, g, rule.x[i], 6);
  const auto I = num::cumulative_integral(t, g);
  return acc + I.back() - num::interp_grid(t, I, cut.t1, 6);
}

}  // namespace

AngularField c_angular(const RadiationSeries& series, const AngularField& gtilde,
                       const CutoffSpec& cutoff, const ScriCoefficient& a0) {
  require_coverage(series, cutoff);
  if (series.rad2.size() != series.rad1.size())
    throw CoefficientError("c_angular needs rad2 alongside rad1");
  const auto& g = series.grid;
  const AngularField gt = resample(gtilde, g);
  AngularField out(g);
  for (int k = 0; k < g->nodes(); ++k) {
    const auto r1 = series.node_series(series.rad1, k);
    const auto r2 = series.node_series(series.rad2, k);
    std::vector<double> nl(r1.size());
    bool any = false;
    for (std::size_t i = 0; i < r1.size(); ++i) {
      nl[i] = a0(series.times[i], g->theta(k), g->phi(k)) * r1[i] * r1[i] * r1[i];
      any = any || nl[i] != 0;
    }
    double v = any ? chi_integral(series.times, nl, cutoff) : 0.0;
    v -= 2 * window_integral(series.times, r2, cutoff, false);
    // -int chi' g~ d_t rad1 = int chi'' g~ rad1
    v += gt[k] * window_integral(series.times, r1, cutoff, true);
    out[k] = v;
  }
  return out;
}

C0Result c0(const RadiationSeries& series, const ScriCoefficient& a0, const AngularField& c2,
            const AngularField& d1, const AngularField& gtilde, double tolerance) {
  if (series.size() < 8) throw CoefficientError("radiation series too short");
  const auto& g = series.grid;
  const AngularField c2g = resample(c2, g), d1g = resample(d1, g), gtg = resample(gtilde, g);
  const auto& t = series.times;
  const double T = t.back();
  std::vector<double> avg(t.size(), 0.0);
  AngularField integ(g);
  for (int k = 0; k < g->nodes(); ++k) {
    std::vector<double> f(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = series.rad1[i][k];
      f[i] = a0(t[i], g->theta(k), g->phi(k)) * r * r * r;
      avg[i] += g->weight(k) * f[i] / (4 * M_PI);
    }
    integ[k] = num::integral(t, f);
  }
  // tail: integrand ~ C t^-3 fitted over the last half of the run
  double num_ = 0, den = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < 0.5 * T) continue;
    const double basis = std::pow(t[i], -3.0);
    num_ += avg[i] * basis;
    den += basis * basis;
  }
  const double C = den > 0 ? num_ / den : 0.0;
  C0Result out;
  out.integral = integ.average();
  out.remainder = C / (2 * T * T);
  out.value = (integ - 2.0 * c2g - gtg * d1g).average();
  out.uncertainty = std::abs(out.remainder);
  const double scale = std::max(std::abs(out.value), 1e-300);
  if (out.uncertainty > tolerance * scale) {
    const double need = T * std::sqrt(out.uncertainty / (tolerance * scale));
    throw TruncationError(
        fmt::format("c0: truncated tail {:.3g} exceeds tolerance {:.3g}; need T_final ~ {:.4g}",
                    out.uncertainty, tolerance * scale, need),
        need);
  }
  return out;
}

AngularField d_angular(const RadiationSeries& series, const OperatorDecomposition& decomp,
                       const ScriCoefficient& b0, int p, const CutoffSpec& cutoff) {
  if (p < 4) throw CoefficientError("d(w) is defined for p >= 4 only");
  require_coverage(series, cutoff);
  if (series.rad2.size() != series.rad1.size() || series.rad3.size() != series.rad1.size())
    throw CoefficientError("d_angular needs rad2 and rad3");
  const auto& g = series.grid;
  const AngularField gt = resample(decomp.gtilde, g), g3 = resample(decomp.g3, g);
  const double q1 = decomp.qtilde1_at_scri();
  AngularField out(g);
  for (int k = 0; k < g->nodes(); ++k) {
    const auto r1 = series.node_series(series.rad1, k);
    const auto r2 = series.node_series(series.rad2, k);
    const auto r3 = series.node_series(series.rad3, k);
    double v = 0;
    if (p == 4) {
      std::vector<double> fp(r1.size());
      bool any = false;
      for (std::size_t i = 0; i < r1.size(); ++i) {
        const double x = r1[i] * r1[i];
        fp[i] = b0(series.times[i], g->theta(k), g->phi(k)) * x * x;
        any = any || fp[i] != 0;
      }
      if (any) v += chi_integral(series.times, fp, cutoff);
    }
    v -= 4 * window_integral(series.times, r3, cutoff, false);
    v -= 2 * q1 * window_integral(series.times, r1, cutoff, false);
    v += gt[k] * window_integral(series.times, r2, cutoff, true);
    v += g3[k] * window_integral(series.times, r1, cutoff, true);
    out[k] = v;
  }
  return out;
}

AngularField tilde_c(const AngularField& c, double tolerance) {
  const double tol = tolerance >= 0 ? tolerance : std::max(1e-10, 1e-3 * c.l2_norm());
  const double mean = c.average();
  if (std::abs(mean) > tol)
    throw PreconditionError(fmt::format(
        "tilde_c: input has sphere average {:.6g} (tolerance {:.3g}); zero average required",
        mean, tol));
  auto coef = c.coefficients();
  coef[0] = 0;
  for (std::size_t i = 1; i < coef.size(); ++i) {
    int l, m;
    SphereGrid::mode_of(static_cast<int>(i), l, m);
    coef[i] /= l * (l + 1.0);
  }
  return AngularField::from_coefficients(c.grid(), coef);
}

AngularField box0_of_ctilde_rho(const OperatorDecomposition& decomp, const AngularField& ct,
                                double rho) {
  const AngularField lap = ct.laplacian();
  const double r3 = rho * rho * rho;
  if (decomp.kind == MetricKind::normal_form) return (lap + (2 * decomp.mass * rho) * ct) * r3;
  // D = rho d/drho, D(rho) = D^2(rho) = rho; DA = -r A'(r)
  double DA = 0;
  if (rho > 0 && decomp.metric) {
    const double r = 1 / rho;
    DA = -r * decomp.metric->dA_dr(r);
  }
  return (lap - DA * ct) * r3;
}

double dX(const ForcingProfile& forcing, const AngularField& c_tilde, const AngularField& d,
          const MetricModel& metric, const OperatorDecomposition& decomp) {
  const double surface = -2.0 * d.average();  // -(1/2pi) int_S2 d
  if (metric.mass == 0) return surface;
  const int n = static_cast<int>(forcing.s.size());
  if (n < 10 || static_cast<int>(forcing.fhat0.size()) != n)
    throw CoefficientError("dX: forcing profile missing");
  const auto& g = forcing.fhat0[0].grid();
  const AngularField ct = resample(c_tilde, g);
  std::vector<AngularField> integrand;
  integrand.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double s = forcing.s[j];
    if (s <= 0 || s >= 1) {
      integrand.emplace_back(g, 0.0);
      continue;
    }
    integrand.push_back(forcing.fhat0[j] - box0_of_ctilde_rho(decomp, ct, rho_of_s(s)));
  }
  const double vol = volume_integral(metric, forcing.s, integrand);
  return metric.mass / M_PI * vol + surface;
}

double first_moment_coefficient(const RadiationSeries& series, const AngularField& gtilde,
                                const CutoffSpec& cutoff) {
  require_coverage(series, cutoff);
  const auto& g = series.grid;
  const AngularField gt = resample(gtilde, g);
  AngularField out(g);
  for (int k = 0; k < g->nodes(); ++k)
    out[k] = gt[k] * window_integral(series.times, series.node_series(series.rad1, k), cutoff,
                                     false);
  return out.average();
}

double c_angular_scale(const RadiationSeries& series, const AngularField& gtilde,
                       const CutoffSpec& cutoff) {
  require_coverage(series, cutoff);
  const auto& g = series.grid;
  const AngularField gt = resample(gtilde, g);
  const auto rule = gauss_rule(cutoff.t0, cutoff.t1);
  AngularField out(g);
  for (int k = 0; k < g->nodes(); ++k) {
    const auto r1 = series.node_series(series.rad1, k);
    const auto r2 = series.node_series(series.rad2, k);
    const auto dr1 = series.drad1.size() == series.rad1.size()
                         ? series.node_series(series.drad1, k)
                         : series_derivative(series.times, r1);
    double acc = 0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const double t = rule.x[i];
      acc += rule.w[i] * std::abs(cutoff.dchi(t)) *
             (2 * std::abs(num::interp_grid(series.times, r2, t, 6)) +
              std::abs(gt[k] * num::interp_grid(series.times, dr1, t, 6)));
    }
    out[k] = acc;
  }
  return out.average();
}

// ---------------------------------------------------------------------------

namespace {

// 4th-order d/ds on a uniform grid with one-sided closures.
std::vector<double> d_ds(const std::vector<double>& f, double h) {
  const int n = static_cast<int>(f.size()) - 1;
  std::vector<double> d(n + 1);
  for (int j = 0; j <= n; ++j) {
    if (j >= 2 && j <= n - 2) {
      d[j] = (f[j - 2] - 8 * f[j - 1] + 8 * f[j + 1] - f[j + 2]) / (12 * h);
    } else if (j < 2) {
      d[j] = (-25 * f[j] + 48 * f[j + 1] - 36 * f[j + 2] + 16 * f[j + 3] - 3 * f[j + 4]) /
             (12 * h);
    } else {
      d[j] = (25 * f[j] - 48 * f[j - 1] + 36 * f[j - 2] - 16 * f[j - 3] + 3 * f[j - 4]) /
             (12 * h);
    }
  }
  return d;
}

}  // namespace

ForcingProfile assemble_forcing(const Trajectory& traj, const ProblemSpec& spec,
                                const CutoffSpec& cutoff, double tolerance) {
  const auto& ts = traj.snap_t;
  if (ts.size() < 8) throw CoefficientError("assemble_forcing: trajectory has no snapshots");
  if (ts.back() < cutoff.t1 + 0.5 * (cutoff.t1 - cutoff.t0))
    throw TruncationError(
        fmt::format("assemble_forcing: run ends at {:g}, before the cutoff window {} closes",
                    ts.back(), cutoff.label()),
        2 * cutoff.t1);
  const int n = traj.grid.n;
  const double h = 1.0 / n;
  const int nm = static_cast<int>(traj.modes.size());
  const int nodes = traj.nodes();
  const auto& metric = spec.metric;
  const double L = metric.height.scale;
  const int p = spec.power;
  const bool nonlinear = spec.coeff.active();

  // geometry along the grid (j = 1 .. n-1)
  std::vector<double> r(n + 1), g00(n + 1), g0r(n + 1), dg0r(n + 1), dsdr(n + 1);
  for (int j = 1; j < n; ++j) {
    const double s = j * h;
    r[j] = r_of_s(s);
    g00[j] = metric.g00(r[j]);
    g0r[j] = metric.g0r(r[j]);
    dg0r[j] = -L * L * std::pow(L * L + r[j] * r[j], -1.5);
    dsdr[j] = 0.5 * (1 - s) * (1 - s);
  }

  // integrand of int f dt per (j, node), accumulated over snapshot times
  // only samples where the integrand can be nonzero, padded by one zero sample
  std::vector<char> on(ts.size());
  for (std::size_t it = 0; it < ts.size(); ++it)
    on[it] = ts[it] >= cutoff.t0 && (ts[it] <= cutoff.t1 || nonlinear);
  std::vector<std::size_t> active;
  for (std::size_t it = 0; it < ts.size(); ++it)
    if (on[it] || (it > 0 && on[it - 1]) || (it + 1 < ts.size() && on[it + 1]))
      active.push_back(it);
  const std::size_t nt = active.size();
  std::vector<double> tsa(nt);
  for (std::size_t a = 0; a < nt; ++a) tsa[a] = ts[active[a]];
  std::vector<std::vector<double>> integrand(static_cast<std::size_t>(n + 1) * nodes,
                                             std::vector<double>(nt, 0.0));
  std::vector<double> last_nl(static_cast<std::size_t>(n + 1) * nodes, 0.0);
  std::vector<double> lin(nm), phi_mode(nm);
  for (std::size_t ia = 0; ia < nt; ++ia) {
    const std::size_t it = active[ia];
    const double t = ts[it];
    const double c1 = cutoff.dchi(t), c2 = cutoff.d2chi(t), c0 = cutoff.chi(t);
    if (c1 == 0 && c2 == 0 && (c0 == 0 || !nonlinear)) continue;
    std::vector<std::vector<double>> dphi(nm);
    for (int m = 0; m < nm; ++m) dphi[m] = d_ds(traj.snap_phi[it][m], h);
    for (int j = 1; j < n; ++j) {
      for (int m = 0; m < nm; ++m) {
        const double Phi = traj.snap_phi[it][m][j];
        const double Pi = traj.snap_pi[it][m][j];
        const double Phir = dphi[m][j] * dsdr[j];
        lin[m] = -2 * c1 * ((g0r[j] * Phir + 0.5 * dg0r[j] * Phi) / r[j] + g00[j] * Pi / r[j]) -
                 c2 * g00[j] * Phi / r[j];
        phi_mode[m] = Phi / r[j];
      }
      for (int q = 0; q < nodes; ++q) {
        double v = traj.nodal(lin, q);
        if (nonlinear && c0 != 0) {
          const double phi = traj.nodal(phi_mode, q);
          const double nl = c0 * spec.coeff.value(t, r[j]) * std::pow(phi, p);
          v += nl;
          if (it + 1 == ts.size()) last_nl[static_cast<std::size_t>(j) * nodes + q] = nl;
        }
        integrand[static_cast<std::size_t>(j) * nodes + q][ia] = v;
      }
    }
  }

  ForcingProfile out;
  auto grid = traj.sphere;
  out.s.resize(n + 1);
  out.fhat0.assign(n + 1, AngularField(grid));
  double fmax = 0, trunc = 0;
  for (int j = 1; j < n; ++j) {
    out.s[j] = j * h;
    for (int q = 0; q < nodes; ++q) {
      const std::size_t idx = static_cast<std::size_t>(j) * nodes + q;
      out.fhat0[j][q] = nt >= 4 ? num::integral(tsa, integrand[idx]) : 0.0;
      fmax = std::max(fmax, std::abs(out.fhat0[j][q]));
      // integrand decays at least like t^-3 past the run: remainder <= |g(T)| T / 2
      trunc = std::max(trunc, std::abs(last_nl[idx]) * ts.back() / 2);
    }
  }
  out.s[0] = 0;
  out.s[n] = 1;
  out.truncation_estimate = trunc;
  if (trunc > tolerance * std::max(fmax, 1e-300) && fmax > 0) {
    const double need = ts.back() * std::sqrt(trunc / (tolerance * fmax));
    throw TruncationError(
        fmt::format("assemble_forcing: nonlinear tail remainder {:.3g} exceeds {:.3g}; "
                    "need T_final ~ {:.4g}",
                    trunc, tolerance * fmax, need),
        need);
  }

  // expansion fit fhat0 / rho^3 = c + d rho on rho in [rho_min, rho_max], rho_max <= 0.1
  out.c_fit = AngularField(grid);
  out.d_fit = AngularField(grid);
  std::vector<int> near;  // grid indices ordered from scri inwards
  for (int j = n - 1; j >= 1; --j)
    if (rho_of_s(j * h) <= 0.1) near.push_back(j);
  if (fmax == 0 || near.size() < 8) {
    out.tail_exponent = std::numeric_limits<double>::infinity();
    return out;
  }
  // fit over near[first .. last)
  auto fit = [&](std::size_t first, std::size_t last, int q) {
    const std::size_t m = last - first;
    Eigen::MatrixXd A(m, 2);
    Eigen::VectorXd y(m);
    for (std::size_t i = 0; i < m; ++i) {
      const int j = near[first + i];
      const double rho = rho_of_s(j * h);
      A(i, 0) = 1;
      A(i, 1) = rho;
      y(i) = out.fhat0[j][q] / (rho * rho * rho);
    }
    return num::least_squares(A, y);
  };
  auto count_below = [&](double rmax) {
    std::size_t c = 0;
    while (c < near.size() && rho_of_s(near[c] * h) <= rmax) ++c;
    return c;
  };
  // outer edge: halve rho_max until the leading coefficient stops moving
  std::size_t last = near.size();
  for (double rmax = 0.05; count_below(rmax) >= 8; rmax /= 2) {
    const std::size_t cand = count_below(rmax);
    double change = 0, scale = 0;
    for (int q = 0; q < nodes; ++q) {
      const double a = fit(0, last, q).coef(0), b = fit(0, cand, q).coef(0);
      change = std::max(change, std::abs(a - b));
      scale = std::max(scale, std::abs(b));
    }
    if (change <= 2e-3 * scale) break;
    last = cand;
  }
  // inner edge: drop points closest to scri while the residual keeps falling
  std::vector<std::size_t> starts;
  for (std::size_t f = 0; f + 8 <= last && f < last / 2; f = std::max<std::size_t>(f + 1, f * 3 / 2))
    starts.push_back(f);
  if (starts.empty()) starts.push_back(0);
  std::vector<double> worst(starts.size(), 0.0);
  for (std::size_t c = 0; c < starts.size(); ++c)
    for (int q = 0; q < nodes; ++q)
      worst[c] = std::max(worst[c], fit(starts[c], last, q).residual_rms);
  const double best = *std::min_element(worst.begin(), worst.end());
  std::size_t pick = starts.size() - 1;
  for (std::size_t c = 0; c < starts.size(); ++c)
    if (worst[c] <= 1.5 * best + 1e-300) {
      pick = c;
      break;
    }
  const std::size_t first = starts[pick];
  out.fit_rho_min = rho_of_s(near[first] * h);
  out.fit_rho_max = rho_of_s(near[last - 1] * h);
  out.fit_residual_norm = 0;
  for (int q = 0; q < nodes; ++q) {
    const auto res = fit(first, last, q);
    out.fit_residual_norm = std::max(out.fit_residual_norm, res.residual_rms);
    out.c_fit[q] = res.coef(0);
    out.d_fit[q] = res.coef(1);
  }
  // decay exponent of max_q |fhat0| over the fit window
  std::vector<double> lx, ly;
  for (std::size_t i = first; i < last; ++i) {
    const int j = near[i];
    double m = 0;
    for (int q = 0; q < nodes; ++q) m = std::max(m, std::abs(out.fhat0[j][q]));
    if (m > 0) {
      lx.push_back(std::log(rho_of_s(j * h)));
      ly.push_back(std::log(m));
    }
  }
  if (lx.size() >= 4) {
    Eigen::MatrixXd A(lx.size(), 2);
    Eigen::VectorXd y(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) A(i, 0) = 1, A(i, 1) = lx[i], y(i) = ly[i];
    out.tail_exponent = num::least_squares(A, y).coef(1);
  } else {
    out.tail_exponent = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace tailslab
