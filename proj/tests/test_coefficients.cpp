#include <doctest.h>

#include <gsl/gsl_integration.h>

#include <cmath>

#include "tailslab/coefficients.hpp"

using namespace tailslab;

namespace {

RadiationSeries series_of(int lmax, double T, int n,
                          const std::function<double(double, double, double)>& f) {
  RadiationSeries s;
  s.grid = SphereGrid::make(lmax);
  for (int i = 0; i < n; ++i) {
    const double t = T * i / (n - 1);
    s.times.push_back(t);
    s.rad1.push_back(
        AngularField::from_function(s.grid, [&](double th, double ph) { return f(t, th, ph); }));
  }
  return s;
}

ScriCoefficient constant_coefficient(double v) {
  return [v](double, double, double) { return v; };
}

OperatorDecomposition trivial_decomposition(std::shared_ptr<const SphereGrid> g, double gtilde) {
  OperatorDecomposition d;
  d.kind = MetricKind::normal_form;
  d.gtilde = AngularField(g, gtilde);
  d.g3 = AngularField(g, 0.0);
  return d;
}

// int chi'(t) e^{-t} dt by GSL adaptive quadrature
double weighted_exp(const CutoffSpec& c) {
  gsl_function f;
  f.function = [](double t, void* p) {
    return static_cast<const CutoffSpec*>(p)->dchi(t) * std::exp(-t);
  };
  f.params = const_cast<CutoffSpec*>(&c);
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(200);
  double v = 0, e = 0;
  gsl_integration_qag(&f, c.t0, c.t1, 0, 1e-13, 200, GSL_INTEG_GAUSS61, ws, &v, &e);
  gsl_integration_workspace_free(ws);
  return v;
}

}  // namespace

TEST_CASE("cutoff profile") {
  const CutoffSpec c(0.5, 1.0);
  CHECK(c.chi(0.4) == 0.0);
  CHECK(c.chi(1.1) == 1.0);
  CHECK(c.dchi(0.75) > 0);
  // int chi' = 1
  double acc = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) acc += c.dchi(0.5 + 0.5 * (i + 0.5) / n) * 0.5 / n;
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
  const auto p = parse_cutoff("2:4");
  CHECK(p.t0 == 2.0);
  CHECK(p.t1 == 4.0);
  CHECK_THROWS(parse_cutoff("4:2"));
  CHECK_THROWS(parse_cutoff("abc"));
}

TEST_CASE("sphere averages") {
  const auto g = SphereGrid::make(6);
  CHECK(sphere_average(AngularField(g, 1.7)) == doctest::Approx(1.7).epsilon(1e-14));
  CHECK(std::abs(sphere_average(AngularField::harmonic(g, 1, 0))) < 1e-14);
  const auto h = AngularField::harmonic(g, 3, -2) + 0.3 * AngularField::harmonic(g, 5, 4);
  CHECK(std::abs(sphere_average(h.laplacian())) < 1e-12);
}

TEST_CASE("c_angular: constant rad2") {
  auto s = series_of(0, 6, 601, [](double, double, double) { return 0.0; });
  s.rad2.assign(s.size(), AngularField(s.grid, 0.3));
  const auto c = c_angular(s, AngularField(s.grid, -1.0), CutoffSpec(0.5, 1.0), zero_coefficient());
  CHECK(c[0] == doctest::Approx(-0.6).epsilon(1e-8));
}

TEST_CASE("c_angular: decaying fields against an independent quadrature") {
  const CutoffSpec cut(0.5, 1.0);
  const double J = weighted_exp(cut);
  // spherical: rad2 = -e^{-t}/2, the two terms cancel
  auto sph = series_of(0, 6, 3001, [](double t, double, double) { return std::exp(-t); });
  const auto g0 = sph.grid;
  sph = rad2_from_recursion(sph, AngularField(g0, 0.0), AngularField(g0, 0.0),
                            AngularField(g0, -1.0), zero_coefficient());
  CHECK(std::abs(c_angular(sph, AngularField(g0, -1.0), cut, zero_coefficient())[0]) < 1e-7);
  // dipole: rad2 = Y1 (1 - 3/2 e^{-t}), c = Y1 (2J - 2)
  auto dip = series_of(2, 6, 3001, [](double t, double th, double ph) {
    return std::exp(-t) * real_ylm(1, 1, th, ph);
  });
  const auto g = dip.grid;
  dip = rad2_from_recursion(dip, AngularField(g, 0.0), AngularField(g, 0.0), AngularField(g, -1.0),
                            zero_coefficient());
  const auto c = c_angular(dip, AngularField(g, -1.0), cut, zero_coefficient());
  for (int k = 0; k < g->nodes(); ++k)
    CHECK(c[k] == doctest::Approx((2 * J - 2) * real_ylm(1, 1, g->theta(k), g->phi(k)))
                       .epsilon(1e-6)
                       .scale(1));
}

TEST_CASE("c0 examples") {
  auto s = series_of(0, 40, 8001, [](double t, double, double) { return std::exp(-t); });
  const auto g = s.grid;
  const AngularField zero(g, 0.0), gt(g, -1.0);
  auto quiet = series_of(0, 40, 401, [](double, double, double) { return 0.0; });
  CHECK(c0(quiet, zero_coefficient(), AngularField(g, 0.25), zero, gt).value ==
        doctest::Approx(-0.5).epsilon(1e-12));
  const auto r = c0(s, constant_coefficient(1.0), zero, zero, gt);
  CHECK(r.value == doctest::Approx(1.0 / 3).epsilon(1e-6));
  CHECK(r.uncertainty >= 0);
}

TEST_CASE("c0 rejects a slowly decaying truncated integrand") {
  auto s = series_of(0, 20, 2001, [](double t, double, double) { return std::pow(1 + t, -0.5); });
  const AngularField zero(s.grid, 0.0);
  CHECK_THROWS_AS(c0(s, constant_coefficient(1.0), zero, zero, AngularField(s.grid, -1.0), 1e-3),
                  TruncationError);
}

TEST_CASE("d_angular examples") {
  auto s = series_of(0, 6, 601, [](double, double, double) { return 0.0; });
  s.rad2 = s.rad1;
  s.rad3 = s.rad1;
  const auto dec = trivial_decomposition(s.grid, 0.0);
  const CutoffSpec cut(0.5, 1.0);
  CHECK(d_angular(s, dec, zero_coefficient(), 4, cut)[0] == 0.0);
  s.rad3.assign(s.size(), AngularField(s.grid, 0.2));
  CHECK(d_angular(s, dec, zero_coefficient(), 5, cut)[0] == doctest::Approx(-0.8).epsilon(1e-8));
  CHECK_THROWS_AS(d_angular(s, dec, zero_coefficient(), 3, cut), CoefficientError);
}

TEST_CASE("d_angular: quartic chain equals 1/4 for any cutoff") {
  // rad2 = 0, rad3 = -(1 - e^{-4t})/16; integrating by parts gives d = (1 - e^{-4T})/4
  auto s = series_of(0, 12, 4801, [](double t, double, double) { return std::exp(-t); });
  const auto g = s.grid;
  s = rad2_from_recursion(s, AngularField(g, 0.0), AngularField(g, 0.0), AngularField(g, 0.0),
                          zero_coefficient());
  const auto dec = trivial_decomposition(g, 0.0);
  s = rad3_from_recursion(s, dec, constant_coefficient(1.0), 4);
  for (const auto& cut : {CutoffSpec(0.5, 1.0), CutoffSpec(2, 4)})
    CHECK(d_angular(s, dec, constant_coefficient(1.0), 4, cut)[0] ==
          doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("tilde_c inverts the Laplacian on l >= 1") {
  const auto g = SphereGrid::make(6);
  const auto y1 = AngularField::harmonic(g, 1, -1), y2 = AngularField::harmonic(g, 2, 1);
  const auto a = tilde_c(y1), b = tilde_c(y2);
  for (int k = 0; k < g->nodes(); ++k) {
    CHECK(a[k] == doctest::Approx(y1[k] / 2).scale(1).epsilon(1e-12));
    CHECK(b[k] == doctest::Approx(y2[k] / 6).scale(1).epsilon(1e-12));
  }
  CHECK_THROWS_AS(tilde_c(AngularField(g, 0.4)), PreconditionError);
}

TEST_CASE("dX examples") {
  const auto g = SphereGrid::make(0);
  const auto flat = build_metric(MetricKind::minkowski_hyperboloidal, 0);
  ForcingProfile none;
  CHECK(dX(none, AngularField(g, 0.0), AngularField(g, 0.3), flat, decompose(flat, 0)) ==
        doctest::Approx(-0.6));
  CHECK(dX(none, AngularField(g, 0.0), AngularField(g, 0.0), flat, decompose(flat, 0)) == 0.0);

  const auto massive = build_metric(MetricKind::mass_deformed, 1.0);
  ForcingProfile F;
  const int n = 4000;
  for (int j = 0; j <= n; ++j) {
    const double s = static_cast<double>(j) / n;
    F.s.push_back(s);
    const double r = j == n ? INFINITY : r_of_s(s);
    F.fhat0.emplace_back(g, std::exp(-r * r));
  }
  CHECK(dX(F, AngularField(g, 0.0), AngularField(g, 0.0), massive, decompose(massive, 0)) ==
        doctest::Approx(std::sqrt(M_PI)).epsilon(1e-6));
}

TEST_CASE("assemble_forcing: zero trajectory") {
  ProblemSpec spec;
  spec.metric = build_metric(MetricKind::minkowski_hyperboloidal, 0);
  spec.power = 3;
  spec.coeff.amplitude = 1.0;
  OutputPlan plan;
  const auto tr = evolve(spec, GridSpec{100, 0.5, 0.02}, 10, plan);
  const auto F = assemble_forcing(tr, spec, CutoffSpec(0.5, 1.0));
  for (const auto& f : F.fhat0) CHECK(f.max_abs() == 0.0);
}

TEST_CASE("assemble_forcing: linear dipole run, fitted rho^3 part matches c_angular") {
  ProblemSpec spec;
  spec.metric = build_metric(MetricKind::minkowski_hyperboloidal, 0);
  spec.symmetry = Symmetry::banded;
  spec.lmax = 1;
  const auto g = SphereGrid::make(1);
  InitialData d;
  d.c1 = d.c2 = d.d1 = AngularField(g, 0.0);
  d.bump0 = Bump{1.0, 0.0, 0.5};
  d.pattern0 = AngularField::harmonic(g, 1, 0);
  d.pattern1 = AngularField(g, 0.0);
  spec.data = d;
  OutputPlan plan;
  plan.probe_r = {1.0};
  const auto tr = evolve(spec, GridSpec{400, 0.5, 0.02}, 12, plan);
  const CutoffSpec cut(2, 4);
  auto rs = extract_rad1(tr);
  const AngularField gt(rs.grid, -1.0), zero(rs.grid, 0.0);
  rs = rad2_from_recursion(rs, zero, zero, gt, zero_coefficient());
  const auto c = c_angular(rs, gt, cut, zero_coefficient());
  const auto F = assemble_forcing(tr, spec, cut);
  REQUIRE(c.max_abs() > 1e-4);
  double e = 0;
  for (int k = 0; k < c.size(); ++k) e = std::max(e, std::abs(F.c_fit[k] - c[k]));
  INFO("c max ", c.max_abs(), " err ", e);
  CHECK(e < 2e-2 * c.max_abs());
}
