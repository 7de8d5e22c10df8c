#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tailslab/evolution.hpp"

using namespace tailslab;

namespace {

ProblemSpec flat_linear(double amp = 1.0) {
  ProblemSpec spec;
  spec.metric = build_metric(MetricKind::minkowski_hyperboloidal, 0);
  spec.data = InitialData::spherical(0, 0, 0, Bump{amp, 0, 0.5});
  return spec;
}

// largest |phi| over probes and times in [a, b]
double window_max(const Trajectory& tr, double a, double b) {
  double m = 0;
  for (std::size_t i = 0; i < tr.probe_t.size(); ++i)
    if (tr.probe_t[i] >= a && tr.probe_t[i] <= b)
      for (const auto& p : tr.probe_phi[i]) m = std::max(m, std::abs(p[0]));
  return m;
}

}  // namespace

TEST_CASE("zero data is a fixed point") {
  ProblemSpec spec = flat_linear(0.0);
  spec.power = 3;
  const GridSpec grid{64, 0.5, 0.02};
  const auto st = initial_state(spec, grid);
  const auto rhs = derive_system(spec, grid);
  const auto& m = st.modes[0];
  std::vector<double> dphi(grid.n + 1), dpi(grid.n + 1);
  ModeState copy = m;
  rhs(0.0, copy.Phi(), copy.Pi(), dphi.data(), dpi.data());
  for (int j = 0; j <= grid.n; ++j) {
    CHECK(dphi[j] == 0.0);
    CHECK(dpi[j] == 0.0);
  }
  const auto next = step(st, {rhs}, grid.dt());
  for (int j = 0; j <= grid.n; ++j) CHECK(next.modes[0].Phi()[j] == 0.0);
}

TEST_CASE("discrete operator converges to the continuous one at fourth order") {
  const ProblemSpec spec = flat_linear(0.0);
  auto err_at = [&](int n) {
    const GridSpec grid{n, 0.5, 0.0};
    const auto rhs = derive_system(spec, grid);
    ModeState st(n);
    auto Phi = [](double s) { return s * std::cos(s); };
    auto Phi_s = [](double s) { return std::cos(s) - s * std::sin(s); };
    auto Phi_ss = [](double s) { return -2 * std::sin(s) - s * std::cos(s); };
    auto Pi = [](double s) { return std::sin(2 * s); };
    auto Pi_s = [](double s) { return 2 * std::cos(2 * s); };
    for (int j = 0; j <= n; ++j) {
      st.Phi()[j] = Phi(static_cast<double>(j) / n);
      st.Pi()[j] = Pi(static_cast<double>(j) / n);
    }
    std::vector<double> dphi(n + 1), dpi(n + 1);
    rhs(0.0, st.Phi(), st.Pi(), dphi.data(), dpi.data());
    double e = 0;
    for (double s : {0.25, 0.5, 0.75}) {
      const int j = static_cast<int>(std::lround(s * n));
      e = std::max(e, std::abs(dpi[j] - rhs.continuous_pi_rhs(j, Phi(s), Phi_s(s), Phi_ss(s),
                                                                Pi(s), Pi_s(s))));
    }
    return e;
  };
  const double e1 = err_at(100), e2 = err_at(200), e3 = err_at(400);
  CHECK(std::log2(e1 / e2) > 3.7);
  CHECK(std::log2(e2 / e3) > 3.7);
}

TEST_CASE("RK4 step has fifth-order local error") {
  const ProblemSpec spec = flat_linear(1.0);
  const GridSpec grid{50, 0.5, 0.0};
  const auto rhs = derive_system(spec, grid);
  const auto st0 = initial_state(spec, grid);
  auto advance = [&](double dt, int steps) {
    EvolutionState s = st0;
    for (int i = 0; i < steps; ++i) {
      s = step(s, {rhs}, dt);
      s.t_star += dt;
    }
    return s;
  };
  auto diff = [&](const EvolutionState& a, const EvolutionState& b) {
    double m = 0;
    for (int j = 0; j <= grid.n; ++j)
      m = std::max(m, std::abs(a.modes[0].Phi()[j] - b.modes[0].Phi()[j]));
    return m;
  };
  const double h = 0.01;
  const auto ref1 = advance(h / 64, 64), ref2 = advance(h / 128, 64);
  const double e1 = diff(advance(h, 1), ref1), e2 = diff(advance(h / 2, 1), ref2);
  CHECK(e1 / e2 > 20);
}

TEST_CASE("trajectory head equals the initial data") {
  const ProblemSpec spec = flat_linear(1.0);
  OutputPlan plan;
  plan.probe_r = {0.25, 0.5, 1.0};
  const auto tr = evolve(spec, GridSpec{400, 0.5, 0.02}, 0.5, plan);
  REQUIRE(tr.probe_t.front() == 0.0);
  for (std::size_t p = 0; p < plan.probe_r.size(); ++p)
    CHECK(tr.probe_phi[0][p][0] ==
          doctest::Approx(spec.data.u0(plan.probe_r[p], 0, 0)).epsilon(1e-6));
}

TEST_CASE("flat linear run: strong Huygens at the probe") {
  const ProblemSpec spec = flat_linear(1.0);
  OutputPlan plan;
  plan.probe_r = {1.0};
  plan.snapshots = false;
  const auto tr = evolve(spec, GridSpec{400, 0.5, 0.02}, 20, plan);
  CHECK(std::abs(tr.probe_phi.back()[0][0]) < 1e-6);
}

TEST_CASE("flat oracle: initial data and Huygens") {
  const InitialData d = InitialData::spherical(0, 0, 0, Bump{1.0, 0, 0.5});
  for (double r : {0.0, 0.2, 0.4, 1.0})
    CHECK(flat_exact_oracle(d, 0.0, r) == doctest::Approx(d.u0(r, 0, 0)).epsilon(1e-10));
  CHECK(std::abs(flat_exact_oracle(d, 10.0, 1.0)) < 1e-12);
}

TEST_CASE("evolve converges to the flat oracle at second order or better") {
  const ProblemSpec spec = flat_linear(1.0);
  OutputPlan plan;
  plan.probe_r = {0.5, 1.0};
  plan.snapshots = false;
  plan.probe_cadence = num::Cadence{0.05, 10.0, 1.0, 0.0};
  auto err = [&](int n) {
    const auto tr = evolve(spec, GridSpec{n, 0.5, 0.02}, 2.0, plan);
    double e = 0;
    for (std::size_t i = 0; i < tr.probe_t.size(); ++i)
      for (std::size_t p = 0; p < plan.probe_r.size(); ++p)
        e = std::max(e, std::abs(tr.probe_phi[i][p][0] -
                                 flat_exact_oracle(spec.data, tr.probe_t[i], plan.probe_r[p])));
    return e;
  };
  const double e1 = err(100), e2 = err(200);
  CHECK(std::log2(e1 / e2) >= 2.0);
}

TEST_CASE("small cubic data: global run with decaying field") {
  ProblemSpec spec = flat_linear(1e-2);
  spec.power = 3;
  spec.coeff.amplitude = 1.0;
  OutputPlan plan;
  plan.snapshots = false;
  const auto tr = evolve(spec, GridSpec{200, 0.5, 0.02}, 1000, plan);
  CHECK(tr.status == "completed");
  const double a = window_max(tr, 50, 100), b = window_max(tr, 100, 300),
               c = window_max(tr, 300, 1000);
  CHECK(a > b);
  CHECK(b > c);
}

TEST_CASE("identical runs are bitwise identical") {
  ProblemSpec spec = flat_linear(1.0);
  spec.coeff.amplitude = 1.0;
  OutputPlan plan;
  plan.snapshots = false;
  const auto a = evolve(spec, GridSpec{100, 0.5, 0.02}, 30, plan);
  const auto b = evolve(spec, GridSpec{100, 0.5, 0.02}, 30, plan);
  CHECK(a.probe_phi == b.probe_phi);
  CHECK(a.near_phi == b.near_phi);
  CHECK(a.spec_hash == b.spec_hash);
}

TEST_CASE("large focusing data blow up with a partial trajectory") {
  ProblemSpec spec = flat_linear(30.0);
  spec.coeff.amplitude = 1.0;
  OutputPlan plan;
  plan.snapshots = false;
  try {
    evolve(spec, GridSpec{200, 0.5, 0.02}, 50, plan);
    FAIL("expected blowup");
  } catch (const BlowupError& e) {
    CHECK(e.time < 50);
    REQUIRE(e.partial);
    CHECK(e.partial->status == "blowup");
  }
}
