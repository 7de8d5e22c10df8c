#pragma once
// Forcing assembly and the closed-form leading tail coefficients.

#include <stdexcept>
#include <string>
#include <vector>

#include "tailslab/evolution.hpp"
#include "tailslab/geometry.hpp"
#include "tailslab/radiation.hpp"
#include "tailslab/sphere.hpp"

namespace tailslab {

struct CoefficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PreconditionError : CoefficientError {
  using CoefficientError::CoefficientError;
};
struct TruncationError : CoefficientError {
  TruncationError(const std::string& what, double required_T)
      : CoefficientError(what), required_t_final(required_T) {}
  double required_t_final;
};

// chi = 0 for t <= t0, 1 for t >= t1, 7th-order smoothstep in between.
struct CutoffSpec {
  double t0 = 0.5, t1 = 1.0;
  CutoffSpec() = default;
  CutoffSpec(double a, double b);
  double chi(double t) const;
  double dchi(double t) const;
  double d2chi(double t) const;
  std::string label() const;
};
CutoffSpec parse_cutoff(const std::string& text);  // "t0:t1"

struct ForcingProfile {
  std::vector<double> s;              // compactified grid
  std::vector<AngularField> fhat0;    // int f dt at each grid point
  AngularField c_fit, d_fit;          // rho^3 and rho^4 coefficients near scri
  double fit_residual_norm = 0;
  double fit_rho_min = 0, fit_rho_max = 0;
  double tail_exponent = 0;           // decay of |fhat0| in rho over the fit window
  double truncation_estimate = 0;     // remainder of the chi a phi^p integral
};

ForcingProfile assemble_forcing(const Trajectory& traj, const ProblemSpec& spec,
                                const CutoffSpec& cutoff, double tolerance = 1e-3);

double sphere_average(const AngularField& g);

// c(w) = int (chi a0 rad1^3 - 2 chi' rad2 - chi' g~ d_t rad1) dt.
// Pass zero_coefficient() for a0 to get the compact-data variant.
AngularField c_angular(const RadiationSeries& series, const AngularField& gtilde,
                       const CutoffSpec& cutoff, const ScriCoefficient& a0);

struct C0Result {
  double value = 0;        // (1/4pi) int (int_0^T a0 rad1^3 - 2 c2 - g~ d1)
  double integral = 0;     // sphere average of the time integral
  double remainder = 0;    // fitted C T^-2 estimate of the truncated tail
  double uncertainty = 0;
};
C0Result c0(const RadiationSeries& series, const ScriCoefficient& a0, const AngularField& c2,
            const AngularField& d1, const AngularField& gtilde, double tolerance = 1e-3);

// d(w) = int (chi F_p - 4 chi' rad3 - 2 chi' Q~1 rad1 - chi' g~ d_t rad2 - chi' g3 d_t rad1) dt
AngularField d_angular(const RadiationSeries& series, const OperatorDecomposition& decomp,
                       const ScriCoefficient& b0, int p, const CutoffSpec& cutoff);

// Harmonic inversion of the spherical Laplacian on the zero-mean part.
AngularField tilde_c(const AngularField& c, double tolerance = -1);

// d_X = (m/pi) int_X (fhat0 - box0(c~ rho)) - (1/2pi) int_S2 d
double dX(const ForcingProfile& forcing, const AngularField& c_tilde, const AngularField& d,
          const MetricModel& metric, const OperatorDecomposition& decomp);

// Sphere average of g~ int chi' rad1 dt. The rho^3 coefficient of the first
// time moment of the forcing; it feeds the t^-3 coefficient alongside d_X.
double first_moment_coefficient(const RadiationSeries& series, const AngularField& gtilde,
                                const CutoffSpec& cutoff);

// Scale used to judge whether c(w) has vanishing average:
// sphere average of int |chi'| (2 |rad2| + |g~ d_t rad1|).
double c_angular_scale(const RadiationSeries& series, const AngularField& gtilde,
                       const CutoffSpec& cutoff);

// box0(c~ rho) at compactified coordinate rho, for the metric families here.
AngularField box0_of_ctilde_rho(const OperatorDecomposition& decomp, const AngularField& ct,
                                double rho);

}  // namespace tailslab
