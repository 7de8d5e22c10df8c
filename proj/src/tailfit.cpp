#include "tailslab/tailfit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "tailslab/numerics.hpp"

namespace tailslab {

namespace {

struct Window {
  std::vector<double> lt, ly, w;
};

// log samples with weights uniform in log t
Window log_window(const std::vector<double>& t, const std::vector<double>& phi, double a,
                  double b) {
  Window out;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= a && t[i] <= b) idx.push_back(i);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    out.lt.push_back(std::log(t[i]));
    out.ly.push_back(std::log(std::abs(phi[i])));
  }
  const std::size_t n = out.lt.size();
  out.w.assign(n, 1.0);
  for (std::size_t k = 0; k < n && n > 1; ++k) {
    const double lo = k > 0 ? out.lt[k - 1] : out.lt[k];
    const double hi = k + 1 < n ? out.lt[k + 1] : out.lt[k];
    out.w[k] = 0.5 * (hi - lo);
  }
  return out;
}

// weighted fit ly = c - e lt; returns (e, log amplitude, rms)
void free_fit(const Window& W, double& e, double& la, double& rms) {
  const int n = static_cast<int>(W.lt.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n), w(n);
  for (int i = 0; i < n; ++i) {
    A(i, 0) = 1;
    A(i, 1) = -W.lt[i];
    y(i) = W.ly[i];
    w(i) = std::sqrt(W.w[i]);
  }
  const auto f = num::least_squares(A, y, w);
  la = f.coef(0);
  e = f.coef(1);
  double s = 0, sw = 0;
  for (int i = 0; i < n; ++i) {
    const double r = W.ly[i] - (la - e * W.lt[i]);
    s += W.w[i] * r * r;
    sw += W.w[i];
  }
  rms = sw > 0 ? std::sqrt(s / sw) : 0;
}

double pinned_fit(const Window& W, double e) {
  double s = 0, sw = 0;
  for (std::size_t i = 0; i < W.lt.size(); ++i) {
    s += W.w[i] * (W.ly[i] + e * W.lt[i]);
    sw += W.w[i];
  }
  return s / sw;
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

TailFit fit_power_law(const std::vector<double>& t, const std::vector<double>& phi, double t_a,
                      double t_b, double pin, const std::string& label) {
  if (t.size() != phi.size()) throw FitError("fit_power_law: t and phi differ in length");
  if (!(t_a > 0) || !(t_b / t_a >= 5))
    throw FitError(fmt::format("fit window [{:g}, {:g}] must satisfy t_b/t_a >= 5", t_a, t_b));
  // move past the last sign change inside the window
  double a = t_a;
  int sign = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_a || t[i] > t_b) continue;
    const int s = phi[i] > 0 ? 1 : (phi[i] < 0 ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign)) a = t[i] * (1 + 1e-12);
    if (s != 0) sign = s;
  }
  if (a > t_a) {
    if (t_b / a < 5)
      throw OscillatoryTailError(fmt::format(
          "fit_power_law{}: sign changes up to t = {:.4g} inside window [{:g}, {:g}]; tail is "
          "not sign-definite",
          label.empty() ? "" : " (" + label + ")", a, t_a, t_b));
    sign = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] >= a && t[i] <= t_b && phi[i] != 0) sign = phi[i] > 0 ? 1 : -1;
  }
  const Window W = log_window(t, phi, a, t_b);
  if (W.lt.size() < 8)
    throw FitError(fmt::format("fit_power_law: only {} samples in [{:g}, {:g}]", W.lt.size(), a,
                               t_b));
  TailFit out;
  out.probe = label;
  out.t_a = a;
  out.t_b = t_b;
  out.sign = sign == 0 ? 1 : sign;
  double e, la, rms;
  free_fit(W, e, la, rms);
  out.exponent = e;
  out.amplitude = std::exp(la);
  out.goodness = rms;
  if (pin > 0) {
    out.has_pinned = true;
    out.pinned_exponent = pin;
    out.pinned_amplitude = std::exp(pinned_fit(W, pin));
  }
  // subwindow resampling: windows covering 60% of the log range at 9 offsets
  const double L0 = std::log(a), L1 = std::log(t_b), span = 0.6 * (L1 - L0);
  std::vector<double> es, as, ps;
  for (int k = 0; k < 9; ++k) {
    const double lo = L0 + (L1 - L0 - span) * k / 8.0;
    const Window S = log_window(t, phi, std::exp(lo), std::exp(lo + span));
    if (S.lt.size() < 5) continue;
    double se, sla, srms;
    free_fit(S, se, sla, srms);
    es.push_back(se);
    as.push_back(std::exp(sla));
    if (pin > 0) ps.push_back(std::exp(pinned_fit(S, pin)));
  }
  out.exponent_err = stddev(es);
  out.amplitude_err = stddev(as);
  out.pinned_amplitude_err = stddev(ps);
  if (es.size() >= 2) {
    out.exponent_drift = std::abs(es.back() - es.front());
    out.power_law = out.exponent_drift <= std::max(0.1, 0.05 * std::abs(e));
  }
  return out;
}

std::string Verdict::describe() const {
  if (indeterminate) return "indeterminate (predicted coefficient is zero)";
  return fmt::format(
      "{}: exponent {} (expected {:g} +- {:g}), ratio {:.4g} in [{:g}, {:g}] {}, sign {}",
      pass ? "pass" : "fail", exponent_ok ? "ok" : "off", expected_exponent, tol.exponent, ratio,
      tol.ratio_lo, tol.ratio_hi, ratio_ok ? "ok" : "off", sign_ok ? "agrees" : "disagrees");
}

Verdict price_verdict(const TailFit& fit, double predicted_coefficient, int p,
                      const VerdictTolerance& tol) {
  Verdict v;
  v.tol = tol;
  v.expected_exponent = p == 3 ? 2.0 : 3.0;
  v.coefficient = predicted_coefficient;
  v.exponent_ok = std::abs(fit.exponent - v.expected_exponent) <= tol.exponent;
  if (predicted_coefficient == 0 || !std::isfinite(predicted_coefficient)) {
    v.indeterminate = fit.amplitude != 0;
    v.pass = false;
    return v;
  }
  v.ratio = fit.signed_amplitude() / (2 * predicted_coefficient);
  v.ratio_free = fit.sign * fit.amplitude / (2 * predicted_coefficient);
  v.sign_ok = v.ratio > 0;
  v.ratio_ok = v.ratio >= tol.ratio_lo && v.ratio <= tol.ratio_hi;
  v.pass = v.exponent_ok && v.ratio_ok && v.sign_ok;
  return v;
}

std::vector<double> probe_series(const Trajectory& traj, int p, int node, bool derivative) {
  if (p < 0 || p >= static_cast<int>(traj.probe_r.size()))
    throw FitError(fmt::format("probe index {} out of range", p));
  const auto& src = derivative ? traj.probe_dphi : traj.probe_phi;
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i][p][node];
  return out;
}

ProfileReport profile_check(const Trajectory& traj, double c0, double t_min, double v_lo,
                            double v_hi) {
  if (c0 == 0) throw FitError("profile_check: c0 is zero");
  ProfileReport rep;
  rep.v_min = v_hi;
  rep.v_max = v_lo;
  for (std::size_t p = 0; p < traj.probe_r.size(); ++p) {
    const double r = traj.probe_r[p];
    for (std::size_t i = 0; i < traj.probe_t.size(); ++i) {
      const double t = traj.probe_t[i];
      const double v = t / r;
      if (t < t_min || v < v_lo || v > v_hi) continue;
      for (int q = 0; q < traj.nodes(); ++q) {
        const double phi = traj.probe_phi[i][p][q];
        const double err = std::abs(phi * t * t / (2 * c0) - v / (v + 2));
        if (err > rep.sup_error) rep.sup_error = err, rep.worst_t = t, rep.worst_v = v;
        ++rep.samples;
      }
      rep.v_min = std::min(rep.v_min, v);
      rep.v_max = std::max(rep.v_max, v);
    }
  }
  // coverage: both ends of the v range must be sampled
  if (rep.samples == 0 || rep.v_min > 1.25 * v_lo || rep.v_max < 0.8 * v_hi)
    throw FitError(fmt::format(
        "profile_check: probes cover v in [{:.3g}, {:.3g}] for t >= {:g}; need [{:g}, {:g}] "
        "(add probes at r ~ t/v)",
        rep.v_min, rep.v_max, t_min, v_lo, v_hi));
  return rep;
}

WindowShift window_shift_check(const std::vector<double>& t, const std::vector<double>& phi,
                               double t_a, double t_b, double pin) {
  const auto f1 = fit_power_law(t, phi, t_a, t_b, pin);
  const double a1 = f1.has_pinned ? f1.pinned_amplitude : f1.amplitude;
  const double e1 = f1.has_pinned ? f1.pinned_amplitude_err : f1.amplitude_err;
  // shift down by 2 when the data do not extend beyond t_b
  const bool up = !t.empty() && t.back() >= 2 * t_b;
  const auto f2 = up ? fit_power_law(t, phi, 2 * t_a, 2 * t_b, pin)
                     : fit_power_law(t, phi, t_a / 2, t_b / 2, pin);
  const double a2 = f2.has_pinned ? f2.pinned_amplitude : f2.amplitude;
  WindowShift w;
  w.amplitude_change = std::abs(a2 - a1);
  w.amplitude_err = e1;
  w.ok = w.amplitude_change < 3 * e1;
  return w;
}

}  // namespace tailslab
