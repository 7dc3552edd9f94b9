#pragma once

#include <cmath>

namespace gwlab {

// quintic smoothstep on [0,1] with two continuous derivatives at both ends
struct Smoothstep {
  static double f(double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    return x * x * x * (10 + x * (-15 + 6 * x));
  }
  static double df(double x) {
    if (x <= 0 || x >= 1) return 0;
    return x * x * (30 + x * (-60 + 30 * x));
  }
  static double d2f(double x) {
    if (x <= 0 || x >= 1) return 0;
    return x * (60 + x * (-180 + 120 * x));
  }
};

// chi(q): 0 for q <= R+1/2, 1 for q >= R+1, monotone quintic in between.
// Upsilon(rho): bump equal to 1 on [3/4, 3/2], 0 outside (1/2, 2).
struct CutoffSpec {
  double R = 2.0;

  double chi(double q) const { return Smoothstep::f(2.0 * (q - R - 0.5)); }
  double chi_p(double q) const { return 2.0 * Smoothstep::df(2.0 * (q - R - 0.5)); }
  double chi_pp(double q) const { return 4.0 * Smoothstep::d2f(2.0 * (q - R - 0.5)); }
  // W(q) = d^2/dq^2 (q chi(q)) = 2 chi' + q chi''
  double W(double q) const { return 2.0 * chi_p(q) + q * chi_pp(q); }
  // antiderivative of W: d/dq (q chi) = chi + q chi'
  double W_antideriv(double q) const { return chi(q) + q * chi_p(q); }

  static double upsilon(double rho) {
    if (rho <= 0.5 || rho >= 2.0) return 0;
    if (rho < 0.75) return Smoothstep::f((rho - 0.5) / 0.25);
    if (rho <= 1.5) return 1.0;
    return Smoothstep::f((2.0 - rho) / 0.5);
  }
  static double upsilon_p(double rho) {
    if (rho <= 0.5 || rho >= 2.0) return 0;
    if (rho < 0.75) return Smoothstep::df((rho - 0.5) / 0.25) / 0.25;
    if (rho <= 1.5) return 0.0;
    return -Smoothstep::df((2.0 - rho) / 0.5) / 0.5;
  }
  // Upsilon(r/t) with the t=0 limit (r/t -> inf, cutoff 0)
  double upsilon_rt(double r, double t) const {
    if (t <= 0) return 0;
    return upsilon(r / t);
  }
  double d_dt_upsilon_rt(double r, double t) const {
    if (t <= 0) return 0;
    return -upsilon_p(r / t) * r / (t * t);
  }
  double d_dr_upsilon_rt(double r, double t) const {
    if (t <= 0) return 0;
    return upsilon_p(r / t) / t;
  }
};

// psi(s) used when extending an extracted profile past the final slice:
// 1 for s <= 2T-1, 0 for s >= 2T
inline double psi_extend(double s, double T) { return 1.0 - Smoothstep::f(s - (2.0 * T - 1.0)); }

}  // namespace gwlab
