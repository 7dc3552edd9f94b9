#pragma once

#include "gwlab/background.hpp"
#include "gwlab/core.hpp"

namespace gwlab {

// solve the nonlinear circle problem: find b (as beta = b/(1+b)) and
// (b0, b1, b2) so that the angular profile equation
//   2 a(th+f)/(1+b)^2 + 1/(1+b)^2 - 1 - 2 b_thth/(1+b) + b_th^2/(1+b)^2
//     = Pi h_target + b0 + b1 cos + b2 sin
// holds, with int b/(1+b) dth = 0 and 1 + f_th = 1/(1+b). The beta
// substitution turns this into
//   -2 beta'' - 2 beta = (1-beta)(Pi h + b0 + b1 cos + b2 sin)
//                        - 2 a(th+f)(1-beta)^3 + R(beta_th, beta),
//   R = -3 beta^2 + beta^3 + 3 beta_th^2/(1-beta),
// solved by a fixed point: each sweep picks (b0,b1,b2) from the three
// solvability integrals (killing modes 0, +-1 of the right-hand side), then
// inverts -2 d^2 - 2 spectrally away from its kernel.
struct CircleSolveResult {
  std::vector<double> b_cos, b_sin;  // Fourier modes of b (index = mode)
  double b0 = 0, b1 = 0, b2 = 0;
  double residual = 0;  // sup-norm of the defining equation on a dense grid
  int iterations = 0;
  double intb = 0;               // residual of the integral condition
  std::vector<double> beta;      // converged beta on the collocation grid
  double contraction_ratio = 0;  // max successive-iterate ratio observed
};

struct BSolveOptions {
  int n_collocation = 128;
  double tol = 1e-10;
  int max_iter = 100;
  double ball = 1e-3;  // solver ball for ||h||_sup
};

CircleSolveResult solve_b_from_h(const std::vector<double>& h_target_modes_cos,
                                 const std::vector<double>& h_target_modes_sin,
                                 const ACoeffs& a, const BSolveOptions& opt = {});

// convenience: h sampled on a collocation grid
CircleSolveResult solve_b_from_h(const std::function<double(double)>& h_target,
                                 const ACoeffs& a, const BSolveOptions& opt = {});

// ---------------------------------------------------------------------------
// finite-s checks of the hypothesis family on a tabulated profile: each bound
// is reported as the max over the tabulated range of (measured / target rate)
// ---------------------------------------------------------------------------
struct HypothesisReport {
  // sup-in-s ratios of || Z^I b ||_{H^k(S^1)} families to their rates
  double r_b_low = 0;      // H^2 norm vs eps^2/(1+s)^2           (low order)
  double r_b_mid = 0;      // H^2 norm vs eps^2                   (mid order)
  double r_dsb = 0;        // ds b H^1 norm vs eps^2 (1+s)^{sigma/2 - 2}
  double r_b_top = 0;      // H^2 norm vs eps^2 (1+s)^rho
  double r_int_dsb = 0;    // int (1+s) ||ds Z^N b||^2_{H^2} vs eps^4 (1+S)^{2rho}
  double r_int_dsb_b = 0;  // the (1-4rho)-weighted variant
  double r_int_d3b = 0;    // int (1+s)^{3-sigma} ||ds^3 b||^2 vs eps^4 (1+S)^{2rho}
  double r_dsb_split = 0;  // ||ds b|| vs max of the two f1/f2 target rates
};

HypothesisReport check_hypotheses_H(const BProfile& b, double eps, double rho, double sigma,
                                    const std::vector<double>& s_samples);

}  // namespace gwlab
