#include "tailslab/radiation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "tailslab/numerics.hpp"

namespace tailslab {

ScriCoefficient scri_coefficient(const NonlinearCoefficient& c) {
  return [c](double t, double, double) { return c.scri(t); };
}

ScriCoefficient zero_coefficient() {
  return [](double, double, double) { return 0.0; };
}

std::vector<double> RadiationSeries::node_series(const std::vector<AngularField>& f,
                                                 int node) const {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i][node];
  return out;
}

std::vector<double> series_derivative(const std::vector<double>& t, const std::vector<double>& f,
                                      double* err_estimate) {
  auto d5 = num::local_poly_derivative(t, f, 5);
  if (err_estimate) {
    const auto d7 = num::local_poly_derivative(t, f, 7);
    double e = 0;
    for (std::size_t i = 0; i < d5.size(); ++i) e = std::max(e, std::abs(d5[i] - d7[i]));
    *err_estimate = e;
  }
  return d5;
}

RadiationSeries extract_rad1(const Trajectory& traj) {
  RadiationSeries out;
  out.grid = traj.sphere;
  out.times = traj.near_t;
  out.provenance1 = "Phi at s = 1 (" + traj.spec_hash.substr(0, 12) + ")";
  const int nm = static_cast<int>(traj.modes.size());
  const int K = traj.near_phi.empty() ? 0 : static_cast<int>(traj.near_phi[0][0].size());
  std::vector<double> vals(nm), ext(nm);
  double gap = 0;
  for (std::size_t i = 0; i < traj.near_t.size(); ++i) {
    AngularField f(traj.sphere), g(traj.sphere), d(traj.sphere);
    if (i < traj.near_pi.size())
      for (int k = 0; k < traj.nodes(); ++k) d[k] = traj.nodal(traj.near_pi[i], k);
    for (int m = 0; m < nm; ++m) {
      vals[m] = traj.near_phi[i][m][0];
      if (K >= 5) {
        // cubic through s = 1 - k ds, k = 1..4, evaluated at s = 1
        const auto& v = traj.near_phi[i][m];
        ext[m] = 4 * v[1] - 6 * v[2] + 4 * v[3] - v[4];
      } else {
        ext[m] = vals[m];
      }
    }
    for (int k = 0; k < traj.nodes(); ++k) {
      f[k] = traj.nodal(vals, k);
      g[k] = traj.nodal(ext, k);
      gap = std::max(gap, std::abs(f[k] - g[k]));
    }
    out.rad1.push_back(std::move(f));
    out.rad1_extrapolated.push_back(std::move(g));
    if (i < traj.near_pi.size()) out.drad1.push_back(std::move(d));
  }
  out.rad1_extrapolation_gap = gap;
  return out;
}

namespace {

void check_times(const RadiationSeries& s) {
  for (int i = 1; i < s.size(); ++i)
    if (!(s.times[i] > s.times[i - 1]))
      throw RadiationError("radiation series times must be strictly increasing");
  if (s.size() < 8) throw RadiationError("radiation series needs at least 8 samples");
}

// Per-node derivative of a series of angular fields.
std::vector<AngularField> time_derivative(const RadiationSeries& s,
                                          const std::vector<AngularField>& f,
                                          double& err) {
  std::vector<AngularField> out(f.size(), AngularField(s.grid));
  err = 0;
  for (int k = 0; k < s.grid->nodes(); ++k) {
    double e = 0;
    const auto d = series_derivative(s.times, s.node_series(f, k), &e);
    err = std::max(err, e);
    for (std::size_t i = 0; i < f.size(); ++i) out[i][k] = d[i];
  }
  return out;
}

std::vector<AngularField> time_integral(const RadiationSeries& s,
                                        const std::vector<AngularField>& f) {
  std::vector<AngularField> out(f.size(), AngularField(s.grid));
  for (int k = 0; k < s.grid->nodes(); ++k) {
    const auto I = num::cumulative_integral(s.times, s.node_series(f, k));
    for (std::size_t i = 0; i < f.size(); ++i) out[i][k] = I[i];
  }
  return out;
}

double max_abs(const std::vector<AngularField>& f) {
  double m = 0;
  for (const auto& x : f) m = std::max(m, x.max_abs());
  return m;
}

}  // namespace

RadiationSeries rad2_from_recursion(const RadiationSeries& rad1, const AngularField& c2,
                                    const AngularField& d1, const AngularField& gtilde,
                                    const ScriCoefficient& a0) {
  check_times(rad1);
  RadiationSeries out = rad1;
  const auto& g = rad1.grid;
  if (c2.grid()->nodes() != g->nodes() || d1.grid()->nodes() != g->nodes() ||
      gtilde.grid()->nodes() != g->nodes())
    throw RadiationError("rad2_from_recursion: angular grids differ");
  double derr = 0;
  const bool measured = rad1.drad1.size() == rad1.rad1.size();
  const auto dR1 = measured ? rad1.drad1 : time_derivative(rad1, rad1.rad1, derr);
  const double scale = std::max(max_abs(dR1), 1e-300);
  if (!measured && derr > 1e-3 * scale)
    out.warnings.push_back(fmt::format(
        "rad2: time sampling coarse, derivative error estimate {:.3g} (max |d_t rad1| {:.3g})",
        derr, scale));
  std::vector<AngularField> src(rad1.size(), AngularField(g));
  for (int i = 0; i < rad1.size(); ++i) {
    const auto lap = rad1.rad1[i].laplacian();
    for (int k = 0; k < g->nodes(); ++k) {
      const double r1 = rad1.rad1[i][k];
      src[i][k] = lap[k] - a0(rad1.times[i], g->theta(k), g->phi(k)) * r1 * r1 * r1;
    }
  }
  const auto I = time_integral(rad1, src);
  out.rad2.assign(rad1.size(), AngularField(g));
  for (int i = 0; i < rad1.size(); ++i)
    for (int k = 0; k < g->nodes(); ++k)
      out.rad2[i][k] = c2[k] + 0.5 * gtilde[k] * (d1[k] - dR1[i][k]) + 0.5 * I[i][k];
  out.provenance2 = "transport recursion along scri";
  return out;
}

RadiationSeries rad3_from_recursion(const RadiationSeries& series,
                                    const OperatorDecomposition& decomp,
                                    const ScriCoefficient& b0, int p) {
  if (p < 4) throw RadiationError("rad3 recursion is only valid for p >= 4");
  if (series.rad2.size() != series.rad1.size())
    throw RadiationError("rad3 recursion needs rad2");
  check_times(series);
  RadiationSeries out = series;
  const auto& g = series.grid;
  const int ng = g->nodes();
  // decomposition fields may live on a finer grid; use their (constant or
  // band-limited) values at our nodes
  auto at_nodes = [&](const AngularField& f) {
    if (f.grid()->nodes() == ng) return f;
    return AngularField::from_function(g, [&](double th, double ph) {
      const auto coef = f.coefficients();
      double acc = 0;
      for (int mode = 0; mode < static_cast<int>(coef.size()); ++mode) {
        int l, m;
        SphereGrid::mode_of(mode, l, m);
        acc += coef[mode] * real_ylm(l, m, th, ph);
      }
      return acc;
    });
  };
  const AngularField gt = at_nodes(decomp.gtilde), g3 = at_nodes(decomp.g3);
  const double q1 = decomp.qtilde1_at_scri();
  const double m = decomp.mass;
  double e1 = 0, e2 = 0;
  const auto dR1 = series.drad1.size() == series.rad1.size()
                       ? series.drad1
                       : time_derivative(series, series.rad1, e1);
  const auto dR2 = time_derivative(series, series.rad2, e2);
  std::vector<AngularField> src(series.size(), AngularField(g));
  for (int i = 0; i < series.size(); ++i) {
    const auto lap2 = series.rad2[i].laplacian();
    for (int k = 0; k < ng; ++k) {
      const double r1 = series.rad1[i][k];
      const double fp =
          (p == 4) ? b0(series.times[i], g->theta(k), g->phi(k)) * r1 * r1 * r1 * r1 : 0.0;
      src[i][k] = lap2[k] - 2 * series.rad2[i][k] + 2 * m * r1 - fp;
    }
  }
  const auto I = time_integral(series, src);
  out.rad3.assign(series.size(), AngularField(g));
  for (int i = 0; i < series.size(); ++i)
    for (int k = 0; k < ng; ++k)
      out.rad3[i][k] = -0.5 * q1 * series.rad1[i][k] - 0.25 * g3[k] * dR1[i][k] -
                       0.25 * gt[k] * dR2[i][k] + 0.25 * I[i][k];
  out.provenance3 = "third-order transport recursion along scri";
  return out;
}

DirectExpansion fit_near_scri_expansion(const Trajectory& traj) {
  DirectExpansion out;
  const int n = traj.grid.n;
  const int nm = static_cast<int>(traj.modes.size());
  if (traj.near_phi.empty()) return out;
  const int K = static_cast<int>(traj.near_phi[0][0].size());
  if (K < 6) throw RadiationError("direct expansion fit needs >= 6 near-scri points");
  std::vector<double> rho(K);
  for (int k = 0; k < K; ++k) {
    const double s = 1.0 - static_cast<double>(k) / n;
    rho[k] = (1 - s) / (2 * s);
  }
  // design matrices for two polynomial degrees in rho for (Phi_k - Phi_0)/rho_k
  auto design = [&](int deg) {
    Eigen::MatrixXd A(K - 1, deg + 1);
    for (int k = 1; k < K; ++k)
      for (int d = 0; d <= deg; ++d) A(k - 1, d) = std::pow(rho[k], d);
    return A;
  };
  const Eigen::MatrixXd A2 = design(2), A3 = design(3);
  std::vector<double> vals(nm);
  for (std::size_t i = 0; i < traj.near_t.size(); ++i) {
    AngularField r2(traj.sphere), e2(traj.sphere), r3(traj.sphere), e3(traj.sphere);
    std::vector<std::vector<double>> nodal(K, std::vector<double>(traj.nodes()));
    for (int k = 0; k < K; ++k) {
      for (int m = 0; m < nm; ++m) vals[m] = traj.near_phi[i][m][k];
      for (int q = 0; q < traj.nodes(); ++q) nodal[k][q] = traj.nodal(vals, q);
    }
    for (int q = 0; q < traj.nodes(); ++q) {
      Eigen::VectorXd y(K - 1);
      for (int k = 1; k < K; ++k) y(k - 1) = (nodal[k][q] - nodal[0][q]) / rho[k];
      const auto f2 = num::least_squares(A2, y);
      const auto f3 = num::least_squares(A3, y);
      r2[q] = f2.coef(0);
      e2[q] = std::abs(f2.coef(0) - f3.coef(0)) + f2.stderr_(0);
      r3[q] = f2.coef(1);
      e3[q] = std::abs(f2.coef(1) - f3.coef(1)) + f2.stderr_(1);
    }
    out.times.push_back(traj.near_t[i]);
    out.rad2.push_back(std::move(r2));
    out.rad2_err.push_back(std::move(e2));
    out.rad3.push_back(std::move(r3));
    out.rad3_err.push_back(std::move(e3));
  }
  return out;
}

}  // namespace tailslab
