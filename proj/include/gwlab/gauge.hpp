#pragma once

#include "gwlab/background.hpp"
#include "gwlab/core.hpp"
#include "gwlab/weights.hpp"

namespace gwlab {

// metric field on the grid with its exact time derivative (first-order state)
struct MetricGrids {
  TensorGrid g;
  TensorGrid gt;
};

// H^alpha = g^{lam bet} Gamma^alpha_{lam bet}, assembled from Christoffels
std::array<Grid, 3> christoffel_H(const MetricGrids& m);
// the divergence form H^alpha = -d_lam g^{lam alpha} - 1/2 g^{lam mu} d^alpha g_{lam mu}
std::array<Grid, 3> wave_gauge_H_divergence(const MetricGrids& m);

// pointwise Christoffel contraction from analytic derivatives
std::array<double, 3> christoffel_H_point(const Sym3& g, const std::array<Sym3, 3>& dg);

// quadratic form P_{mu nu}(g)(D, D) of the reduced Ricci identity
//   R = -1/2 g^{ab} dd g + 1/2 H^r d_r g + 1/2 (g dn H + sym) + 1/2 P
// D[kappa] holds d_kappa of the differentiated tensor
Sym3 P_quadratic(const Sym3& ginv, const Sym3& g, const std::array<Sym3, 3>& D);

// ---------------------------------------------------------------------------
// the constructed gauge source G. The three prescriptions fix the frame
// expansion G = gl L + gu U + 0 Lbar:
//   gl = (1/r) Upsilon(r/t) int_inf^r (2 (dq phi)^2 r' - h(th,2t) M(q')) dr'
//   gu = +1/2 sigma0_UL chi'(q)
// The h multiplier M is selectable. curvature_matched (default) uses
// M = -1/2 d^2/dq^2(q chi), the value that makes the band curvature of g_b
// cancel exactly against the gauge-derivative source in the LbarLbar
// equation (measured: 2 R_b|_LbarLbar = -4 d^2_q(q chi) h / r). The other
// two are the displayed variants, kept for comparison runs.
// ---------------------------------------------------------------------------
enum class GlMultiplier { curvature_matched, d2q_qchi, chi_prime };

struct GaugeSource {
  Grid gl, gu;             // frame slots (Lbar slot identically zero)
  Grid Gt, G1, G2;         // coordinate components
  Grid gl_t, gu_t;         // d_t of the slots
  // radial and angular slot derivatives; the cutoff-band parts are analytic
  // (the band is only a few cells wide, grid stencils cannot carry it)
  Grid gl_r, gl_th, gu_r, gu_th;
};

// h_row: h(theta_i, s=2t) per theta index; sigma0_UL is evaluated per ring
GaugeSource G_source(const Grid& phi, const Grid& phi_t, const std::vector<double>& h_row,
                     const std::vector<double>& h_row_ds, const Background& bg, double t,
                     GlMultiplier mult = GlMultiplier::curvature_matched);

// support check used by G_source (Prop. cone): phi must vanish for q >= R+1/2
// up to tol; returns the max violation
double support_violation(const Grid& phi, double R, double t);

// ---------------------------------------------------------------------------
// the gauge modulation Gtilde: first order in gtil, built from the
// high-derivative part of the background gradient (full minus masked jet)
// ---------------------------------------------------------------------------
std::array<double, 3> G_tilde_point(const Sym3& gtil, const MetricJet& full,
                                    const MetricJet& masked);
// grid assembly; zero fast path when the profile is zero
std::array<Grid, 3> G_tilde(const TensorGrid& gtil, const Background& bg, double t);

// ---------------------------------------------------------------------------
// gauge residual H(g) - (F_b + G + Gtilde)
// ---------------------------------------------------------------------------
struct GaugeResidual {
  std::array<Grid, 3> res;
  double sup = 0;
  double weighted_l2 = 0;
};

GaugeResidual gauge_residual(const MetricGrids& m, const std::array<Grid, 3>& Fb,
                             const GaugeSource& G, const std::array<Grid, 3>& Gt,
                             const WeightSpec& w, double t);

}  // namespace gwlab
