#pragma once

#include "gwlab/core.hpp"
#include "gwlab/cutoffs.hpp"
#include "gwlab/frame.hpp"

#include <memory>
#include <optional>

namespace gwlab {

// ---------------------------------------------------------------------------
// a(theta) = a0 + a1 cos + a2 sin, plus the twist profile J(theta)
// ---------------------------------------------------------------------------
struct ACoeffs {
  double a0 = 0, a1 = 0, a2 = 0;
  std::vector<double> J_cos, J_sin;  // J = J_cos[0] + sum_m>=1 (...); index 0 is the mean
  double a(double th) const { return a0 + a1 * std::cos(th) + a2 * std::sin(th); }
  double a_p(double th) const { return -a1 * std::sin(th) + a2 * std::cos(th); }
  double J(double th) const;
  double J_p(double th) const;
  bool J_zero() const;
};

// leading-order coefficients from the scalar field data (quadrature on the grid)
ACoeffs a_from_phi(const Grid& phi0, const Grid& phi1);

std::string acoeffs_to_text(const ACoeffs& a);
ACoeffs acoeffs_from_text(const std::string& text);

// ---------------------------------------------------------------------------
// the gauge profile b(theta, s) and its companion f with 1 + f_theta = 1/(1+b)
// ---------------------------------------------------------------------------

// jet of b at one point: B[l][k] = d_s^l d_th^k b (l<=2, l+k<=3),
// F[l] = d_s^l f (l<=2)
struct BSlots {
  double B[3][4] = {};
  double F[3] = {};
  double P() const { return 1.0 + B[0][0]; }
};

enum class JetMask { full, low_only };
// zero the slots of high derivative pattern (l+k-2 >= 1 or l >= 2;
// f counts as one negative theta derivative): B03, B12, B20, B21, F2
void apply_mask(BSlots& s, JetMask m);

// s-dependence of one Fourier mode of b
struct SProfile {
  enum class Kind { constant, power, sinusoid } kind = Kind::constant;
  double amp = 0;
  double p = 0;       // power: amp (1+s)^p
  double omega = 0;   // sinusoid: amp sin(omega s + phase)
  double phase = 0;
  double eval(int l, double s) const;  // l-th s-derivative, l <= 3
};

struct BMode {
  int m = 0;
  SProfile cosine, sine;  // coefficients of cos(m th), sin(m th)
};

class BProfile {
 public:
  BProfile();  // zero profile
  // analytic modes; the mode-0 profile is corrected per s so that
  // int b/(1+b) dth = 0 (rejects profiles needing a large correction)
  static BProfile analytic(std::vector<BMode> modes);
  // tabulated: Fourier rows on an s-grid, cubic spline in s
  static BProfile tabulated(std::vector<double> s_grid,
                            std::vector<std::vector<double>> rows,  // a0 a1 b1 a2 b2 ...
                            int n_modes);

  bool is_zero() const { return zero_; }

  // per-ring (fixed s) preparation; jets along the ring are then cheap
  struct Ring {
    double s = 0;
    double c0_corr = 0;                       // intb mode-0 correction
    std::vector<std::array<double, 2>> bm[3];  // modes of d_s^l b (cos, sin)
    std::vector<std::array<double, 2>> fm[3];  // modes of d_s^l f
  };
  Ring prepare(double s) const;
  BSlots slots(const Ring& ring, double theta) const;
  BSlots slots(double theta, double s) const;  // convenience (prepares a ring)

  double b(double theta, double s) const { return slots(theta, s).B[0][0]; }
  double intb_residual(double s) const;  // int b/(1+b) dth with the correction applied
  double min_one_plus_b(double s) const;

  std::string to_text() const;  // tabulated form (analytic profiles are sampled)
  static BProfile from_text(const std::string& text, const std::vector<double>& s_samples = {});

  int n_modes() const { return n_modes_; }

 private:
  bool zero_ = true;
  int n_modes_ = 0;
  std::vector<BMode> modes_;  // analytic backend
  // tabulated backend
  bool tab_ = false;
  std::vector<double> sg_;
  std::vector<std::vector<double>> rows_;     // coefficient rows
  std::vector<std::vector<double>> spline2_;  // second derivatives per coefficient
  void tab_eval(double s, int l, std::vector<double>& out) const;
  void mode_data(double s, int l, std::vector<std::array<double, 2>>& out) const;
};

// the change of variables of the exterior construction
struct ChartPoint {
  double sp, qp, thp;
};
ChartPoint change_of_variables(double s, double q, double theta, const BProfile& b);

// g_a evaluated at a point given in primed coordinates, returned in primed
// (t', x') components; throws if r' + a q' <= 0
Sym3 metric_ga(double sp, double qp, double thp, const ACoeffs& a);

// h(theta, s): the effective angular profile of the background
double h_of(const BProfile& b, const ACoeffs& a, double theta, double s);
double h_of(const BSlots& sl, const ACoeffs& a, double theta);
// ds h, from the next jet level
double h_of_ds(const BProfile& b, const ACoeffs& a, double theta, double s);

// sigma^0_{UL} = s (1+b) d_s f
double sigma0_UL(const BSlots& sl, double s);

// ---------------------------------------------------------------------------
// the background metric g_b = chi(q) g_a + (1-chi) m, with exact first
// derivatives in (t, x1, x2) components
// ---------------------------------------------------------------------------
struct MetricJet {
  Sym3 g;
  std::array<Sym3, 3> dg;  // d_t, d_1, d_2
};

class Background {
 public:
  Background(CutoffSpec cut, ACoeffs a, BProfile b)
      : cut_(cut), a_(std::move(a)), b_(std::move(b)) {}

  const CutoffSpec& cutoff() const { return cut_; }
  const ACoeffs& acoeffs() const { return a_; }
  const BProfile& bprofile() const { return b_; }

  Sym3 g(double t, double r, double theta) const;
  MetricJet jet(double t, double r, double theta, JetMask mask = JetMask::full) const;
  // evaluation reusing a prepared b-ring at s = t + r
  MetricJet jet(const BProfile::Ring& ring, double t, double r, double theta,
                JetMask mask = JetMask::full) const;

  bool trivial_at(double q) const {  // exactly Minkowski here
    return cut_.chi(q) == 0.0 && cut_.chi_p(q) == 0.0;
  }
  bool is_minkowski() const;

  double h(double theta, double s) const { return h_of(b_, a_, theta, s); }

 private:
  CutoffSpec cut_;
  ACoeffs a_;
  BProfile b_;
};

// ---------------------------------------------------------------------------
// finite-difference Christoffel / Ricci evaluator for any space-time metric
// ---------------------------------------------------------------------------
using MetricFunc = std::function<Sym3(double t, double x1, double x2)>;

// R_{mu nu} at a point by nested central differences with step h
Sym3 ricci_fd(const MetricFunc& g, double t, double x1, double x2, double h);
// Christoffel of second kind at a point (alpha; mu nu), FD step h
std::array<Sym3, 3> christoffel_fd(const MetricFunc& g, double t, double x1, double x2,
                                   double h);

}  // namespace gwlab
