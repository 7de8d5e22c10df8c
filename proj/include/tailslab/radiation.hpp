#pragma once
// Radiation fields at scri: the measured first field and the second/third
// fields from their transport recursions along scri.

#include <functional>
#include <string>
#include <vector>

#include "tailslab/evolution.hpp"
#include "tailslab/geometry.hpp"
#include "tailslab/sphere.hpp"

namespace tailslab {

// Coefficient at scri as a function of (t_*, theta, phi).
using ScriCoefficient = std::function<double(double, double, double)>;
ScriCoefficient scri_coefficient(const NonlinearCoefficient& c);
ScriCoefficient zero_coefficient();

struct RadiationSeries {
  std::vector<double> times;
  std::shared_ptr<const SphereGrid> grid;
  std::vector<AngularField> rad1, rad2, rad3;
  // d_t rad1 read from the evolved time derivative at scri (empty if unavailable)
  std::vector<AngularField> drad1;
  std::string provenance1, provenance2, provenance3;
  std::vector<std::string> warnings;

  // extrapolation-based estimate of rad1 and its spread (error indicator)
  std::vector<AngularField> rad1_extrapolated;
  double rad1_extrapolation_gap = 0;

  int size() const { return static_cast<int>(times.size()); }
  // time series at one node
  std::vector<double> node_series(const std::vector<AngularField>& f, int node) const;
};

struct RadiationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RadiationSeries extract_rad1(const Trajectory& traj);

// rad2 = c2 + g~ (d1 - d_t rad1)/2 + (1/2) int_0^t (Lap rad1 - a0 rad1^3)
// d_t rad1 comes from `drad1` when present, otherwise from local polynomial fits.
RadiationSeries rad2_from_recursion(const RadiationSeries& rad1, const AngularField& c2,
                                    const AngularField& d1, const AngularField& gtilde,
                                    const ScriCoefficient& a0);

// rad3 = -Q~1 rad1 /2 - g3 d_t rad1 /4 - g~ d_t rad2 /4
//        + (1/4) int_0^t ((Lap - 2) rad2 + 2 m rad1 - F_p),  F_p = b0 rad1^4 iff p = 4
RadiationSeries rad3_from_recursion(const RadiationSeries& series,
                                    const OperatorDecomposition& decomp,
                                    const ScriCoefficient& b0, int p);

// Direct fit of the expansion Phi = rad1 + rad2 rho + rad3 rho^2 + ... from the
// near-scri samples of a trajectory.
struct DirectExpansion {
  std::vector<double> times;
  std::vector<AngularField> rad2, rad2_err, rad3, rad3_err;
};
DirectExpansion fit_near_scri_expansion(const Trajectory& traj);

// d/dt of a series by local polynomial fits, with an error indicator from a
// second stencil width.
std::vector<double> series_derivative(const std::vector<double>& t, const std::vector<double>& f,
                                      double* err_estimate = nullptr);

}  // namespace tailslab
