#include "tailslab/geometry.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "tailslab/numerics.hpp"

namespace tailslab {

std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::minkowski_hyperboloidal: return "minkowski_hyperboloidal";
    case MetricKind::mass_deformed: return "mass_deformed";
    case MetricKind::normal_form: return "normal_form";
  }
  return "unknown";
}

MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "minkowski_hyperboloidal" || s == "flat") return MetricKind::minkowski_hyperboloidal;
  if (s == "mass_deformed") return MetricKind::mass_deformed;
  if (s == "normal_form") return MetricKind::normal_form;
  throw GeometryError("unknown metric kind '" + s + "'");
}

namespace {
// (1 + x)^{-3/2} and friends for the mass profile, x = (core rho)^2
double pow_m32(double x) { return std::exp(-1.5 * std::log1p(x)); }
double pow_m52(double x) { return std::exp(-2.5 * std::log1p(x)); }
}  // namespace

double MetricModel::mass_defect_over_rho(double rho) const {
  if (kind != MetricKind::mass_deformed || mass == 0) return 0;
  const double x = core_radius * core_radius * rho * rho;
  return 2 * mass * pow_m32(x);
}

double MetricModel::A(double r) const {
  if (kind != MetricKind::mass_deformed || mass == 0) return 1.0;
  const double c2 = core_radius * core_radius;
  return 1 - 2 * mass * r * r * std::pow(r * r + c2, -1.5);
}

double MetricModel::dA_dr(double r) const {
  if (kind != MetricKind::mass_deformed || mass == 0) return 0.0;
  const double c2 = core_radius * core_radius;
  return -2 * mass * r * (2 * c2 - r * r) * std::pow(r * r + c2, -2.5);
}

double MetricModel::hprime(double r) const {
  const double L = height.scale;
  return height.slope * r / (A(r) * std::sqrt(L * L + r * r));
}

double MetricModel::h(double r) const {
  const double L = height.scale;
  if (kind != MetricKind::mass_deformed || mass == 0)
    return height.slope * (std::sqrt(L * L + r * r) - L);
  if (r <= 0) return 0;
  // flat part in closed form, mass correction by quadrature
  auto corr = [this, L](double x) {
    return height.slope * x / std::sqrt(L * L + x * x) * (1 / A(x) - 1);
  };
  const double c = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(corr, 0.0, r,
                                                                                  10, 1e-12);
  return height.slope * (std::sqrt(L * L + r * r) - L) + c;
}

double MetricModel::g00(double r) const {
  const double L = height.scale;
  const double s2 = height.slope * height.slope;
  return (-1 + s2 * r * r / (L * L + r * r)) / A(r);
}

double MetricModel::g0r(double r) const {
  const double L = height.scale;
  return -height.slope * r / std::sqrt(L * L + r * r);
}

double MetricModel::g00_over_rho2(double rho) const {
  if (kind == MetricKind::normal_form) return gtilde0;
  const double L = height.scale;
  const double Arho = 1 - rho * mass_defect_over_rho(rho);
  if (height.slope == 1.0) return -L * L / (Arho * (1 + L * L * rho * rho));
  const double s2 = height.slope * height.slope;
  return (-1 + s2 / (1 + L * L * rho * rho)) / (Arho * rho * rho);
}

double MetricModel::gtilde() const {
  if (kind == MetricKind::normal_form) return gtilde0;
  return -height.scale * height.scale;
}

double MetricModel::g3() const {
  if (kind == MetricKind::normal_form) return 0.0;
  return -2 * mass * height.scale * height.scale;
}

std::string MetricModel::describe() const {
  if (kind == MetricKind::normal_form)
    return fmt::format("normal_form m={:.6g} gtilde={:.6g}", mass, gtilde0);
  std::string base = fmt::format(
      "{} m={:.6g}; height h'(r) = {:.6g} r/(A(r) sqrt({:.6g}^2 + r^2))", to_string(kind), mass,
      height.slope, height.scale);
  if (kind == MetricKind::mass_deformed)
    base += fmt::format("; A = 1 - 2 m r^2 / (r^2 + {:.6g}^2)^(3/2)", core_radius);
  return base;
}

MetricModel build_metric(MetricKind kind, double mass, const HeightParams& height,
                         double normal_form_gtilde) {
  if (!(mass >= 0)) throw GeometryError("mass must be >= 0");
  MetricModel m;
  m.kind = kind;
  m.mass = mass;
  m.height = height;
  if (kind == MetricKind::normal_form) {
    m.gtilde0 = normal_form_gtilde;
    return m;
  }
  if (kind == MetricKind::minkowski_hyperboloidal && mass != 0)
    throw GeometryError("minkowski_hyperboloidal requires mass = 0");
  if (!(height.scale > 0)) throw GeometryError("height scale must be positive");
  m.core_radius = 4 * mass;
  // timelike slices on a sample grid, including the approach to scri
  for (int j = 1; j < 2048; ++j) {
    const double r = r_of_s(j / 2048.0);
    if (!(m.g00(r) < 0))
      throw GeometryError(fmt::format(
          "slicing not timelike: g00 = {:.3g} >= 0 at r = {:.6g}", m.g00(r), r));
    if (!(m.A(r) > 0)) throw GeometryError(fmt::format("A(r) <= 0 at r = {:.6g}", r));
  }
  if (std::abs(height.slope - 1.0) > 1e-12)
    throw GeometryError("height slope must be 1 (h(r) - r bounded at infinity)");
  return m;
}

double tortoise(double r, double m) {
  if (m > 0 && !(r > 2 * m))
    throw std::domain_error(fmt::format("tortoise: r = {} must exceed 2m = {}", r, 2 * m));
  if (m == 0) return r;
  return r + 2 * m * std::log(r - 2 * m);
}

// ---------------------------------------------------------------------------
// Operator pieces acting on profiles sampled uniformly in log rho.

namespace {

struct LogDiff {
  std::vector<AngularField> d1, d2;
};

LogDiff log_derivatives(const RadialProfile& u, bool want_second) {
  const int n = u.size();
  if (n < 6) throw std::invalid_argument("profile needs at least 6 samples");
  if (static_cast<int>(u.u.size()) != n) throw std::invalid_argument("profile shape mismatch");
  const double h = std::log(u.rho[1]) - std::log(u.rho[0]);
  for (int j = 2; j < n; ++j) {
    const double hj = std::log(u.rho[j]) - std::log(u.rho[j - 1]);
    if (std::abs(hj - h) > 1e-8 * std::abs(h))
      throw std::invalid_argument("profile must be uniform in log rho");
  }
  const auto& f = u.u;
  auto comb = [&](std::initializer_list<std::pair<int, double>> terms, double scale) {
    AngularField out(f[0].grid());
    for (auto [idx, c] : terms) {
      const auto& v = f[idx].values();
      for (int k = 0; k < out.size(); ++k) out[k] += c * v[k];
    }
    return out * scale;
  };
  LogDiff out;
  out.d1.resize(n);
  if (want_second) out.d2.resize(n);
  const double i12h = 1 / (12 * h), i12h2 = 1 / (12 * h * h);
  for (int j = 0; j < n; ++j) {
    if (j >= 2 && j <= n - 3) {
      out.d1[j] = comb({{j - 2, 1}, {j - 1, -8}, {j + 1, 8}, {j + 2, -1}}, i12h);
      if (want_second)
        out.d2[j] = comb({{j - 2, -1}, {j - 1, 16}, {j, -30}, {j + 1, 16}, {j + 2, -1}}, i12h2);
    } else if (j == 0) {
      out.d1[j] = comb({{0, -25}, {1, 48}, {2, -36}, {3, 16}, {4, -3}}, i12h);
      if (want_second)
        out.d2[j] = comb({{0, 45}, {1, -154}, {2, 214}, {3, -156}, {4, 61}, {5, -10}}, i12h2);
    } else if (j == 1) {
      out.d1[j] = comb({{0, -3}, {1, -10}, {2, 18}, {3, -6}, {4, 1}}, i12h);
      if (want_second)
        out.d2[j] = comb({{0, 10}, {1, -15}, {2, -4}, {3, 14}, {4, -6}, {5, 1}}, i12h2);
    } else if (j == n - 2) {
      out.d1[j] =
          comb({{n - 1, 3}, {n - 2, 10}, {n - 3, -18}, {n - 4, 6}, {n - 5, -1}}, i12h);
      if (want_second)
        out.d2[j] = comb({{n - 1, 10}, {n - 2, -15}, {n - 3, -4}, {n - 4, 14}, {n - 5, -6},
                          {n - 6, 1}},
                         i12h2);
    } else {
      out.d1[j] =
          comb({{n - 1, 25}, {n - 2, -48}, {n - 3, 36}, {n - 4, -16}, {n - 5, 3}}, i12h);
      if (want_second)
        out.d2[j] = comb({{n - 1, 45}, {n - 2, -154}, {n - 3, 214}, {n - 4, -156},
                          {n - 5, 61}, {n - 6, -10}},
                         i12h2);
    }
  }
  return out;
}

// Radial coefficient functions of the metric family expressed in rho.
struct RhoCoeffs {
  double A, DA;              // A and rho dA/drho
  double dA_over_rho2;       // (A - 1 + 2 m rho) / rho^2
  double AmDA_over_rho2;     // (A - 1 - DA) / rho^2
};

RhoCoeffs rho_coeffs(const MetricModel& m, double rho) {
  RhoCoeffs c{1, 0, 0, 0};
  if (m.kind != MetricKind::mass_deformed || m.mass == 0) return c;
  const double cr = m.core_radius;
  const double x = cr * cr * rho * rho;
  const double w = pow_m32(x);
  c.A = 1 - 2 * m.mass * rho * w;
  c.DA = -2 * m.mass * rho * (w - 3 * x * pow_m52(x));
  const double one_minus_w = -std::expm1(-1.5 * std::log1p(x));
  c.dA_over_rho2 = (x > 0) ? 2 * m.mass * cr * cr * rho * one_minus_w / x : 0.0;
  c.AmDA_over_rho2 = -6 * m.mass * cr * cr * rho * pow_m52(x);
  return c;
}

double qtilde_k(double L, double rho) {
  const double x = L * L * rho * rho;
  if (x < 1e-300) return -0.5 * L * L;
  return std::expm1(-0.5 * std::log1p(x)) / (rho * rho);
}

RadialProfile like(const RadialProfile& u) {
  RadialProfile out;
  out.rho = u.rho;
  out.u.reserve(u.u.size());
  for (const auto& f : u.u) out.u.emplace_back(f.grid());
  return out;
}

}  // namespace

RadialProfile OperatorDecomposition::box0(const RadialProfile& u) const {
  const auto d = log_derivatives(u, true);
  RadialProfile out = like(u);
  for (int j = 0; j < u.size(); ++j) {
    const double rho = u.rho[j];
    const AngularField lap = u.u[j].laplacian();
    AngularField v(u.u[j].grid());
    if (kind == MetricKind::normal_form) {
      // rho^2 (L0 + rho L1) u with L0 = -D^2 + D + Lap, L1 = 2m D^2
      v = (-1 + 2 * mass * rho) * d.d2[j] + d.d1[j] + lap;
    } else {
      const auto c = rho_coeffs(*metric, rho);
      v = (-c.A) * d.d2[j] + (c.A - c.DA) * d.d1[j] + lap;
    }
    out.u[j] = v * (rho * rho);
  }
  return out;
}

RadialProfile OperatorDecomposition::L2(const RadialProfile& u) const {
  RadialProfile out = like(u);
  if (kind == MetricKind::normal_form || mass == 0) return out;
  const auto d = log_derivatives(u, true);
  for (int j = 0; j < u.size(); ++j) {
    const auto c = rho_coeffs(*metric, u.rho[j]);
    out.u[j] = (-c.dA_over_rho2) * d.d2[j] + c.AmDA_over_rho2 * d.d1[j];
  }
  return out;
}

RadialProfile OperatorDecomposition::Qtilde(const RadialProfile& u) const {
  RadialProfile out = like(u);
  if (kind == MetricKind::normal_form) return out;
  const auto d = log_derivatives(u, false);
  const double L = metric->height.scale;
  for (int j = 0; j < u.size(); ++j) {
    const double rho = u.rho[j];
    const double k = qtilde_k(L, rho);
    const double z = -0.5 * L * L * std::exp(-1.5 * std::log1p(L * L * rho * rho));
    out.u[j] = k * (d.d1[j] - u.u[j]) + z * u.u[j];
  }
  return out;
}

RadialProfile OperatorDecomposition::Qtilde1(const RadialProfile& u) const {
  RadialProfile out = like(u);
  if (kind == MetricKind::normal_form) return out;
  const auto d = log_derivatives(u, false);
  const double L = metric->height.scale;
  for (int j = 0; j < u.size(); ++j) {
    const double rho = u.rho[j];
    const double k = qtilde_k(L, rho);
    const double z = -0.5 * L * L * std::exp(-1.5 * std::log1p(L * L * rho * rho));
    out.u[j] = k * d.d1[j] + z * u.u[j];
  }
  return out;
}

double OperatorDecomposition::qtilde1_at_scri() const {
  if (kind == MetricKind::normal_form) return 0.0;
  const double L = metric->height.scale;
  return -0.5 * L * L;
}

OperatorDecomposition decompose(const MetricModel& metric, int lmax) {
  auto grid = SphereGrid::make(lmax);
  OperatorDecomposition d;
  d.kind = metric.kind;
  d.mass = metric.mass;
  d.gtilde = AngularField(grid, metric.gtilde());
  d.g3 = AngularField(grid, metric.g3());
  d.metric = std::make_shared<const MetricModel>(metric);
  return d;
}

RadialProfile apply_box_zero(const OperatorDecomposition& d, const RadialProfile& u) {
  return d.box0(u);
}

// ---------------------------------------------------------------------------

namespace {

// Decay exponent of |g| in r from samples at large radius; +inf if g vanishes there.
double tail_exponent(const std::vector<double>& r, const std::vector<double>& g) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (std::abs(g[i]) > 0 && std::isfinite(g[i])) {
      lx.push_back(std::log(r[i]));
      ly.push_back(std::log(std::abs(g[i])));
    }
  if (lx.size() < 2) return std::numeric_limits<double>::infinity();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= lx.size(), my /= lx.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i)
    sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  return -sxy / sxx;
}

}  // namespace

double volume_integral(const MetricModel& metric,
                       const std::function<double(double, double, double)>& g, int lmax) {
  (void)metric;  // |dg_X| = r^2 dr d omega for every model in this family
  auto grid = SphereGrid::make(lmax);
  boost::math::quadrature::tanh_sinh<double> ts;
  double total = 0;
  for (int k = 0; k < grid->nodes(); ++k) {
    const double th = grid->theta(k), ph = grid->phi(k);
    std::vector<double> rs, gs;
    for (double r = 1e3; r <= 1.01e6; r *= std::sqrt(10.0)) {
      rs.push_back(r);
      gs.push_back(g(r, th, ph));
    }
    const double e = tail_exponent(rs, gs);
    if (e < 3.5)
      throw NonIntegrableError(
          fmt::format("volume_integral: integrand decays like rho^{:.3g} (need > 3.5)", e));
    auto f = [&](double s) {
      if (s <= 0 || s >= 1) return 0.0;
      const double r = r_of_s(s);
      const double jac = 8 * s * s / std::pow(1 - s, 4);
      const double v = g(r, th, ph) * jac;
      return std::isfinite(v) ? v : 0.0;
    };
    total += grid->weight(k) * ts.integrate(f, 0.0, 1.0, 1e-11);
  }
  return total;
}

double volume_integral(const MetricModel& metric, const std::vector<double>& s,
                       const std::vector<AngularField>& g) {
  (void)metric;
  const int n = static_cast<int>(s.size());
  if (n < 10 || static_cast<int>(g.size()) != n)
    throw std::invalid_argument("volume_integral: need >= 10 matching samples");
  auto grid = g[0].grid();
  double total = 0;
  for (int k = 0; k < grid->nodes(); ++k) {
    std::vector<double> rs, gs;
    for (int j = n - 9; j < n - 1; ++j) {
      rs.push_back(r_of_s(s[j]));
      gs.push_back(g[j][k]);
    }
    const double e = tail_exponent(rs, gs);
    if (e < 3.5)
      throw NonIntegrableError(
          fmt::format("volume_integral: sampled integrand decays like rho^{:.3g}", e));
    std::vector<double> f(n);
    for (int j = 0; j < n - 1; ++j) f[j] = g[j][k] * 8 * s[j] * s[j] / std::pow(1 - s[j], 4);
    // value at scri from the interior samples
    double w[4], nodes[4];
    for (int i = 0; i < 4; ++i) nodes[i] = s[n - 2 - i];
    num::lagrange_weights(nodes, 4, s[n - 1], w);
    f[n - 1] = 0;
    for (int i = 0; i < 4; ++i) f[n - 1] += w[i] * f[n - 2 - i];
    total += grid->weight(k) * num::integral(s, f);
  }
  return total;
}

}  // namespace tailslab
