#pragma once
// Stationary asymptotically flat backgrounds in hyperboloidal (t_*, r, omega)
// coordinates and the zero-frequency pieces of the wave operator.
//
// Sign convention: box = d_t^2 - Laplacian in flat space, so a > 0 focuses.

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tailslab/sphere.hpp"

namespace tailslab {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonIntegrableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MetricKind { minkowski_hyperboloidal, mass_deformed, normal_form };
std::string to_string(MetricKind k);
MetricKind metric_kind_from_string(const std::string& s);

// Slicing t_* = t - h(r) with h'(r) = slope * r / (A(r) sqrt(scale^2 + r^2)).
// scale = slope = 1 in flat space gives h = sqrt(1 + r^2) - 1.
struct HeightParams {
  double scale = 1.0;
  double slope = 1.0;
};

class MetricModel {
 public:
  MetricKind kind = MetricKind::minkowski_hyperboloidal;
  double mass = 0.0;
  HeightParams height;
  double core_radius = 0.0;  // mass_deformed: M(r) = m r^3 / (r^2 + core^2)^{3/2}
  double gtilde0 = -1.0;     // normal_form only

  // Radial-radial coefficient A(r) of the dual metric and its r-derivative.
  double A(double r) const;
  double dA_dr(double r) const;
  // rho^-1 (1 - A) as a function of rho, accurate near rho = 0
  double mass_defect_over_rho(double rho) const;

  double h(double r) const;
  double hprime(double r) const;
  double g00(double r) const;
  double g0r(double r) const;
  double grr(double r) const { return A(r); }
  double sqrt_det(double r) const { return r * r; }
  // rho^-2 g00 as a function of rho, continuous at rho = 0
  double g00_over_rho2(double rho) const;

  // (r, omega) forms; every model here is spherically symmetric
  double g00_profile(double r, double, double) const { return g00(r); }
  double g0X_profile(double r, double, double) const { return g0r(r); }
  double gXX_profile(double r, double, double) const { return grr(r); }

  double gtilde() const;  // rho^2 coefficient of g00 at scri
  double g3() const;      // rho^3 coefficient
  bool evolvable() const { return kind != MetricKind::normal_form; }
  std::string describe() const;
};

MetricModel build_metric(MetricKind kind, double mass, const HeightParams& height = {},
                         double normal_form_gtilde = -1.0);

double tortoise(double r, double m);

// Samples on a grid uniform in log(rho), rho strictly decreasing or increasing.
struct RadialProfile {
  std::vector<double> rho;
  std::vector<AngularField> u;
  int size() const { return static_cast<int>(rho.size()); }
};

class OperatorDecomposition {
 public:
  MetricKind kind = MetricKind::minkowski_hyperboloidal;
  double mass = 0.0;
  AngularField gtilde;
  AngularField g3;

  RadialProfile box0(const RadialProfile& u) const;
  RadialProfile Qtilde(const RadialProfile& u) const;
  RadialProfile Qtilde1(const RadialProfile& u) const;
  RadialProfile L2(const RadialProfile& u) const;
  // Q~1 acting on a rho-independent profile, evaluated at rho = 0: a pure multiplier.
  double qtilde1_at_scri() const;

  std::shared_ptr<const MetricModel> metric;
};

OperatorDecomposition decompose(const MetricModel& metric, int lmax = 8);

RadialProfile apply_box_zero(const OperatorDecomposition& d, const RadialProfile& u);

// int_X g |dg_X| for g given as a function of (r, theta, phi).
double volume_integral(const MetricModel& metric,
                       const std::function<double(double, double, double)>& g, int lmax = 0);
// Same for samples on the compactified grid s_j (uniform, s_0 = 0, last = 1).
double volume_integral(const MetricModel& metric, const std::vector<double>& s,
                       const std::vector<AngularField>& g);

// Compactification helpers: r = 2s/(1-s).
inline double r_of_s(double s) { return 2 * s / (1 - s); }
inline double s_of_r(double r) { return r / (r + 2); }
inline double rho_of_s(double s) { return (1 - s) / (2 * s); }

}  // namespace tailslab
