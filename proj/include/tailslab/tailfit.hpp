#pragma once
// Late-time power-law fits and the verdicts comparing them with predicted
// tail coefficients.

#include <stdexcept>
#include <string>
#include <vector>

#include "tailslab/evolution.hpp"

namespace tailslab {

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OscillatoryTailError : FitError {
  using FitError::FitError;
};

struct TailFit {
  std::string probe;          // label, e.g. "r=5"
  double t_a = 0, t_b = 0;    // fit window actually used
  double exponent = 0;        // |phi| ~ amplitude t^-exponent
  double amplitude = 0;       // positive
  double exponent_err = 0, amplitude_err = 0;
  double goodness = 0;        // rms residual of log|phi|
  int sign = 1;               // sign of phi on the window
  bool power_law = true;      // false if the exponent drifts across the window
  double exponent_drift = 0;
  // refit with the exponent held fixed
  double pinned_exponent = 0;
  double pinned_amplitude = 0, pinned_amplitude_err = 0;
  bool has_pinned = false;
  double signed_amplitude() const { return sign * (has_pinned ? pinned_amplitude : amplitude); }
};

// Free fit of log|phi| against log t on [t_a, t_b]; `pin` > 0 also fits the
// amplitude with the exponent held at `pin`.
TailFit fit_power_law(const std::vector<double>& t, const std::vector<double>& phi, double t_a,
                      double t_b, double pin = 0, const std::string& label = "");

struct VerdictTolerance {
  double exponent = 0.1;
  double ratio_lo = 0.8, ratio_hi = 1.25;
  static VerdictTolerance symmetric(double exponent, double amplitude) {
    return {exponent, 1 - amplitude, 1 + amplitude};
  }
};

struct Verdict {
  double expected_exponent = 0;
  double coefficient = 0;      // c0 or d_X
  double ratio = 0;            // signed amplitude / (2 coefficient), pinned when available
  double ratio_free = 0;       // same with the free-fit amplitude
  bool exponent_ok = false, ratio_ok = false, sign_ok = false;
  bool indeterminate = false;  // prediction is zero
  bool pass = false;
  VerdictTolerance tol;
  std::string describe() const;
};

Verdict price_verdict(const TailFit& fit, double predicted_coefficient, int p,
                      const VerdictTolerance& tol = {});

struct ProfileReport {
  double sup_error = 0;
  double worst_t = 0, worst_v = 0;
  double v_min = 0, v_max = 0;
  int samples = 0;
};
// sup over probes and times t >= t_min with v = t / r in [v_lo, v_hi] of
// |phi t^2 / (2 c0) - v/(v+2)|.
ProfileReport profile_check(const Trajectory& traj, double c0, double t_min = 100,
                            double v_lo = 0.5, double v_hi = 5);

// phi (or d_t phi) at probe `p`, angular node `node`, as a time series.
std::vector<double> probe_series(const Trajectory& traj, int p, int node = 0,
                                 bool derivative = false);

// Amplitude change when the window is shifted by a factor 2, for the robustness check.
struct WindowShift {
  double amplitude_change = 0;
  double amplitude_err = 0;
  bool ok = false;
};
WindowShift window_shift_check(const std::vector<double>& t, const std::vector<double>& phi,
                               double t_a, double t_b, double pin = 0);

}  // namespace tailslab
