#include <doctest.h>

#include <cmath>

#include "tailslab/radiation.hpp"

using namespace tailslab;

namespace {

// Dense synthetic series on [0, T] built from a function of (t, theta, phi).
RadiationSeries synthetic(int lmax, double T, int n,
                          const std::function<double(double, double, double)>& f) {
  RadiationSeries s;
  s.grid = SphereGrid::make(lmax);
  for (int i = 0; i < n; ++i) {
    const double t = T * i / (n - 1);
    s.times.push_back(t);
    s.rad1.push_back(AngularField::from_function(s.grid, [&](double th, double ph) { return f(t, th, ph); }));
  }
  return s;
}

ScriCoefficient constant_coefficient(double v) {
  return [v](double, double, double) { return v; };
}

OperatorDecomposition trivial_decomposition(std::shared_ptr<const SphereGrid> g, double gtilde) {
  OperatorDecomposition d;
  d.kind = MetricKind::normal_form;  // Q~1 = 0 at scri
  d.mass = 0;
  d.gtilde = AngularField(g, gtilde);
  d.g3 = AngularField(g, 0.0);
  return d;
}

double max_err(const std::vector<double>& t, const std::vector<AngularField>& f,
               const std::function<double(double, int)>& exact) {
  double e = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (int k = 0; k < f[i].size(); ++k) e = std::max(e, std::abs(f[i][k] - exact(t[i], k)));
  return e;
}

ProblemSpec flat_pulse() {
  ProblemSpec spec;
  spec.metric = build_metric(MetricKind::minkowski_hyperboloidal, 0);
  spec.data = InitialData::spherical(0, 0, 0, Bump{1.0, 0, 0.5});
  return spec;
}

Trajectory flat_run(int n, double T) {
  OutputPlan plan;
  plan.snapshots = false;
  plan.probe_r = {1.0};
  plan.trace_cadence = num::Cadence{0.05, 1e9, 1.0, 0.0};
  return evolve(flat_pulse(), GridSpec{n, 0.5, 0.02}, T, plan);
}

}  // namespace

TEST_CASE("zero trajectory gives a zero series") {
  ProblemSpec spec = flat_pulse();
  spec.data = InitialData::spherical();
  OutputPlan plan;
  plan.snapshots = false;
  const auto tr = evolve(spec, GridSpec{64, 0.5, 0.02}, 5, plan);
  const auto s = extract_rad1(tr);
  REQUIRE(s.size() > 8);
  for (const auto& f : s.rad1) CHECK(f.max_abs() == 0.0);
}

TEST_CASE("rad2: constant c2 and vanishing rad1") {
  auto s = synthetic(0, 5, 101, [](double, double, double) { return 0.0; });
  const auto g = s.grid;
  const auto out = rad2_from_recursion(s, AngularField(g, 0.7), AngularField(g, 0.0),
                                       AngularField(g, -1.0), zero_coefficient());
  for (const auto& f : out.rad2) CHECK(f[0] == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("rad2: decaying dipole") {
  auto s = synthetic(2, 6, 1201, [](double t, double th, double ph) {
    return std::exp(-t) * real_ylm(1, 0, th, ph);
  });
  const auto g = s.grid;
  const auto out = rad2_from_recursion(s, AngularField(g, 0.0), AngularField(g, 0.0),
                                       AngularField(g, -1.0), zero_coefficient());
  const double e = max_err(s.times, out.rad2, [&](double t, int k) {
    return real_ylm(1, 0, g->theta(k), g->phi(k)) * (1 - 1.5 * std::exp(-t));
  });
  CHECK(e < 1e-6);
  CHECK(out.warnings.empty());
}

TEST_CASE("rad2: constant spherical rad1 gives zero") {
  auto s = synthetic(0, 5, 101, [](double, double, double) { return 2.5; });
  const auto g = s.grid;
  const auto out = rad2_from_recursion(s, AngularField(g, 0.0), AngularField(g, 0.0),
                                       AngularField(g, -1.0), zero_coefficient());
  for (const auto& f : out.rad2) CHECK(std::abs(f[0]) < 1e-12);
}

TEST_CASE("rad2: coarse sampling is flagged") {
  auto s = synthetic(0, 40, 12, [](double t, double, double) { return std::exp(-t); });
  const auto g = s.grid;
  const auto out = rad2_from_recursion(s, AngularField(g, 0.0), AngularField(g, 0.0),
                                       AngularField(g, -1.0), zero_coefficient());
  CHECK_FALSE(out.warnings.empty());
}

TEST_CASE("rad3 is rejected for p = 3 and vanishes for zero input") {
  auto s = synthetic(0, 5, 101, [](double, double, double) { return 0.0; });
  s.rad2 = s.rad1;
  const auto d = trivial_decomposition(s.grid, -1.0);
  CHECK_THROWS_AS(rad3_from_recursion(s, d, zero_coefficient(), 3), RadiationError);
  const auto out = rad3_from_recursion(s, d, zero_coefficient(), 5);
  for (const auto& f : out.rad3) CHECK(f[0] == 0.0);
}

TEST_CASE("rad3: quartic source only") {
  auto s = synthetic(0, 6, 2401, [](double t, double, double) { return std::exp(-t); });
  s.rad2.assign(s.size(), AngularField(s.grid, 0.0));
  const auto d = trivial_decomposition(s.grid, 0.0);
  const auto out = rad3_from_recursion(s, d, constant_coefficient(1.0), 4);
  const double e = max_err(s.times, out.rad3,
                           [](double t, int) { return -(1 - std::exp(-4 * t)) / 16; });
  CHECK(e < 1e-6);
}

TEST_CASE("rad3: chained through the rad2 recursion, p = 5") {
  auto s = synthetic(0, 6, 2401, [](double t, double, double) { return std::exp(-t); });
  const auto g = s.grid;
  s = rad2_from_recursion(s, AngularField(g, 0.0), AngularField(g, 0.0), AngularField(g, -1.0),
                          zero_coefficient());
  const auto d = trivial_decomposition(g, -1.0);
  const auto out = rad3_from_recursion(s, d, zero_coefficient(), 5);
  const double e =
      max_err(s.times, out.rad3, [](double t, int) { return 0.25 - std::exp(-t) / 8; });
  CHECK(e < 1e-6);
}

TEST_CASE("extract_rad1 on a flat outgoing pulse matches the exact solution at scri") {
  const auto tr = flat_run(400, 8);
  const auto s = extract_rad1(tr);
  double e = 0, peak = 0;
  for (int i = 0; i < s.size(); ++i) {
    const double ex = flat_exact_oracle(tr.spec.data, s.times[i], INFINITY);
    e = std::max(e, std::abs(s.rad1[i][0] - ex));
    peak = std::max(peak, std::abs(ex));
  }
  CHECK(peak > 0.1);
  CHECK(e < 1e-3 * peak);
}

TEST_CASE("extract_rad1 self-converges at second order or better") {
  const auto a = extract_rad1(flat_run(200, 6));
  const auto b = extract_rad1(flat_run(400, 6));
  const auto c = extract_rad1(flat_run(800, 6));
  REQUIRE(a.size() == b.size());
  REQUIRE(b.size() == c.size());
  double d1 = 0, d2 = 0;
  for (int i = 0; i < a.size(); ++i) {
    d1 = std::max(d1, std::abs(a.rad1[i][0] - b.rad1[i][0]));
    d2 = std::max(d2, std::abs(b.rad1[i][0] - c.rad1[i][0]));
  }
  CHECK(std::log2(d1 / d2) >= 2.0);
}

TEST_CASE("series derivative of a smooth function") {
  std::vector<double> t, f;
  for (int i = 0; i < 400; ++i) {
    t.push_back(0.05 * i * (1 + 0.002 * i));
    f.push_back(std::sin(t.back()));
  }
  double err = 0;
  const auto d = series_derivative(t, f, &err);
  double e = 0;
  for (std::size_t i = 0; i < t.size(); ++i) e = std::max(e, std::abs(d[i] - std::cos(t[i])));
  CHECK(e < 1e-4);
  CHECK(err >= 0);
}
