#include "gwlab/background.hpp"
#include "gwlab/dual3.hpp"

#include <complex>
#include <cstring>
#include <sstream>

namespace gwlab {

// ---------------------------------------------------------------------------
// ACoeffs
// ---------------------------------------------------------------------------
double ACoeffs::J(double th) const {
  double v = J_cos.empty() ? 0.0 : J_cos[0];
  for (size_t m = 1; m < J_cos.size(); ++m) v += J_cos[m] * std::cos(m * th);
  for (size_t m = 1; m < J_sin.size(); ++m) v += J_sin[m] * std::sin(m * th);
  return v;
}
double ACoeffs::J_p(double th) const {
  double v = 0;
  for (size_t m = 1; m < J_cos.size(); ++m) v -= m * J_cos[m] * std::sin(m * th);
  for (size_t m = 1; m < J_sin.size(); ++m) v += m * J_sin[m] * std::cos(m * th);
  return v;
}
bool ACoeffs::J_zero() const {
  for (double c : J_cos) if (c != 0) return false;
  for (double c : J_sin) if (c != 0) return false;
  return true;
}

ACoeffs a_from_phi(const Grid& phi0, const Grid& phi1) {
  Grid d1, d2;
  cartesian_grad(phi0, d1, d2);
  const GridSpec& sp = phi0.spec;
  Grid e(sp), p1(sp), p2(sp);
  for (int j = 0; j < sp.n_r; ++j)
    for (int i = 0; i < sp.n_theta; ++i) {
      double dot = phi1.at(j, i);
      e.at(j, i) = dot * dot + d1.at(j, i) * d1.at(j, i) + d2.at(j, i) * d2.at(j, i);
      p1.at(j, i) = dot * d1.at(j, i);
      p2.at(j, i) = dot * d2.at(j, i);
    }
  ACoeffs a;
  a.a0 = integrate(e) / (4 * pi);
  a.a1 = integrate(p1) / pi;
  a.a2 = integrate(p2) / pi;
  return a;
}

std::string acoeffs_to_text(const ACoeffs& a) {
  std::ostringstream os;
  os.precision(17);
  os << "acoeffs v1\n";
  os << "a0 " << a.a0 << "\na1 " << a.a1 << "\na2 " << a.a2 << "\n";
  os << "J " << a.J_cos.size() << "\n";
  for (size_t m = 0; m < a.J_cos.size(); ++m)
    os << a.J_cos[m] << " " << (m < a.J_sin.size() ? a.J_sin[m] : 0.0) << "\n";
  return os.str();
}

ACoeffs acoeffs_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string tag, ver, key;
  is >> tag >> ver;
  if (tag != "acoeffs") throw std::runtime_error("acoeffs_from_text: bad header");
  ACoeffs a;
  size_t nj = 0;
  is >> key >> a.a0 >> key >> a.a1 >> key >> a.a2 >> key >> nj;
  a.J_cos.resize(nj);
  a.J_sin.resize(nj);
  for (size_t m = 0; m < nj; ++m) is >> a.J_cos[m] >> a.J_sin[m];
  return a;
}

// ---------------------------------------------------------------------------
// BProfile
// ---------------------------------------------------------------------------
void apply_mask(BSlots& s, JetMask m) {
  if (m == JetMask::full) return;
  // the frozen high-pattern inventory: l+k-2 >= 1 or l >= 2, with f counting
  // as one theta antiderivative
  s.B[0][3] = 0;  // d_th^3 b
  s.B[1][2] = 0;  // d_s d_th^2 b
  s.B[2][0] = 0;  // d_s^2 b
  s.B[2][1] = 0;  // d_s^2 d_th b
  s.F[2] = 0;     // d_s^2 f
}

double SProfile::eval(int l, double s) const {
  switch (kind) {
    case Kind::constant:
      return l == 0 ? amp : 0.0;
    case Kind::power: {
      double c = amp;
      for (int k = 0; k < l; ++k) c *= (p - k);
      return c * std::pow(1.0 + s, p - l);
    }
    case Kind::sinusoid:
      return amp * std::pow(omega, l) * std::sin(omega * s + phase + l * pi / 2);
  }
  return 0;
}

BProfile::BProfile() = default;

BProfile BProfile::analytic(std::vector<BMode> modes) {
  BProfile b;
  b.modes_ = std::move(modes);
  b.zero_ = b.modes_.empty();
  for (const auto& m : b.modes_) b.n_modes_ = std::max(b.n_modes_, m.m);
  return b;
}

namespace {
// natural cubic spline second derivatives
std::vector<double> spline_m(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = int(x.size());
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  std::vector<double> a(n, 0), b(n, 0), c(n, 0), d(n, 0);
  for (int i = 1; i < n - 1; ++i) {
    double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    a[i] = h0 / 6;
    b[i] = (h0 + h1) / 3;
    c[i] = h1 / 6;
    d[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
  }
  // Thomas
  for (int i = 2; i < n - 1; ++i) {
    double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  for (int i = n - 2; i >= 1; --i)
    m[i] = (d[i] - (i + 1 <= n - 2 ? c[i] * m[i + 1] : 0.0)) / b[i];
  return m;
}

// value and derivatives of a cubic spline at s (constant extrapolation of the
// end values outside the table)
void spline_eval(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& m, double s, double out[4]) {
  const int n = int(x.size());
  if (n == 1) { out[0] = y[0]; out[1] = out[2] = out[3] = 0; return; }
  double sc = std::min(std::max(s, x.front()), x.back());
  int i = int(std::upper_bound(x.begin(), x.end(), sc) - x.begin()) - 1;
  i = std::max(0, std::min(i, n - 2));
  double h = x[i + 1] - x[i], A = (x[i + 1] - sc) / h, B = (sc - x[i]) / h;
  out[0] = A * y[i] + B * y[i + 1] +
           ((A * A * A - A) * m[i] + (B * B * B - B) * m[i + 1]) * h * h / 6;
  out[1] = (y[i + 1] - y[i]) / h - (3 * A * A - 1) / 6 * h * m[i] + (3 * B * B - 1) / 6 * h * m[i + 1];
  out[2] = A * m[i] + B * m[i + 1];
  out[3] = (m[i + 1] - m[i]) / h;
  if (s != sc) { out[1] = out[2] = out[3] = 0; }  // flat outside the table
}
}  // namespace

BProfile BProfile::tabulated(std::vector<double> s_grid, std::vector<std::vector<double>> rows,
                             int n_modes) {
  if (s_grid.size() != rows.size() || s_grid.empty())
    throw std::invalid_argument("BProfile::tabulated: inconsistent table");
  BProfile b;
  b.tab_ = true;
  b.zero_ = true;
  b.n_modes_ = n_modes;
  b.sg_ = std::move(s_grid);
  b.rows_ = std::move(rows);
  const size_t ncol = 2 * size_t(n_modes) + 1;
  for (auto& r : b.rows_) {
    if (r.size() != ncol) throw std::invalid_argument("BProfile::tabulated: bad row width");
    for (double v : r) if (v != 0) b.zero_ = false;
  }
  b.spline2_.resize(ncol);
  std::vector<double> col(b.sg_.size());
  for (size_t c = 0; c < ncol; ++c) {
    for (size_t k = 0; k < b.sg_.size(); ++k) col[k] = b.rows_[k][c];
    b.spline2_[c] = spline_m(b.sg_, col);
  }
  return b;
}

void BProfile::tab_eval(double s, int l, std::vector<double>& out) const {
  const size_t ncol = 2 * size_t(n_modes_) + 1;
  out.assign(ncol, 0.0);
  std::vector<double> col(sg_.size());
  for (size_t c = 0; c < ncol; ++c) {
    for (size_t k = 0; k < sg_.size(); ++k) col[k] = rows_[k][c];
    double d[4];
    spline_eval(sg_, col, spline2_[c], s, d);
    out[c] = d[l];
  }
}

void BProfile::mode_data(double s, int l, std::vector<std::array<double, 2>>& out) const {
  out.assign(size_t(n_modes_) + 1, {0.0, 0.0});
  if (zero_) return;
  if (tab_) {
    std::vector<double> row;
    tab_eval(s, l, row);
    out[0] = {row[0], 0.0};
    for (int m = 1; m <= n_modes_; ++m) out[m] = {row[2 * m - 1], row[2 * m]};
    return;
  }
  for (const auto& md : modes_) {
    out[md.m][0] += md.cosine.eval(l, s);
    out[md.m][1] += md.sine.eval(l, s);
  }
}

BProfile::Ring BProfile::prepare(double s) const {
  Ring ring;
  ring.s = s;
  if (zero_) return ring;
  for (int l = 0; l < 3; ++l) mode_data(s, l, ring.bm[l]);

  // dense collocation for the intb correction and the f antiderivatives
  // (power of two for the FFT)
  int nf = 64;
  while (nf < 8 * (n_modes_ + 1)) nf *= 2;
  auto eval_series = [&](const std::vector<std::array<double, 2>>& mm, double th) {
    double v = mm[0][0];
    for (size_t m = 1; m < mm.size(); ++m)
      v += mm[m][0] * std::cos(m * th) + mm[m][1] * std::sin(m * th);
    return v;
  };
  std::vector<double> b0(nf), b1(nf), b2(nf);
  double amp = 0;
  for (int k = 0; k < nf; ++k) {
    double th = 2 * pi * k / nf;
    b0[k] = eval_series(ring.bm[0], th);
    b1[k] = eval_series(ring.bm[1], th);
    b2[k] = eval_series(ring.bm[2], th);
    amp = std::max(amp, std::abs(b0[k]));
  }

  // Newton for the mode-0 correction c with int (b+c)/(1+b+c) dth = 0
  double c = 0;
  for (int it = 0; it < 8; ++it) {
    double G = 0, Gc = 0;
    for (int k = 0; k < nf; ++k) {
      double u = 1.0 + b0[k] + c;
      if (u <= 0.5) throw std::invalid_argument("BProfile: 1+b <= 1/2 (change of variables degenerate)");
      G += 1.0 - 1.0 / u;
      Gc += 1.0 / (u * u);
    }
    c -= G / Gc;
  }
  if (std::abs(c) > 10.0 * amp * amp + 1e-12)
    throw std::invalid_argument(
        "BProfile: profile violates the integral condition int b/(1+b) dth = 0 "
        "beyond its quadratic correction (e.g. a constant mode)");
  // s-derivatives of the correction (implicit differentiation)
  double s2 = 0, s3 = 0, sb1 = 0, sb1sq = 0, sb2 = 0;
  for (int k = 0; k < nf; ++k) {
    double u = 1.0 / (1.0 + b0[k] + c);
    s2 += u * u;
    s3 += u * u * u;
    sb1 += u * u * b1[k];
    sb2 += u * u * b2[k];
  }
  double c1 = -sb1 / s2;
  for (int k = 0; k < nf; ++k) {
    double u = 1.0 / (1.0 + b0[k] + c);
    double bs = b1[k] + c1;
    sb1sq += u * u * u * bs * bs;
  }
  double c2 = (2 * sb1sq - sb2) / s2;
  ring.c0_corr = c;
  ring.bm[0][0][0] += c;
  ring.bm[1][0][0] += c1;
  ring.bm[2][0][0] += c2;
  for (int k = 0; k < nf; ++k) { b0[k] += c; b1[k] += c1; b2[k] += c2; }

  // f levels by spectral antidifferentiation of
  //   u0 = 1/(1+b) - 1,  u1 = -b_s/(1+b)^2,  u2 = (2 b_s^2 - b_ss(1+b))/(1+b)^3
  std::vector<std::complex<double>> work(nf);
  const int mf = std::min(nf / 3, 2 * n_modes_ + 8);
  auto antider = [&](const std::vector<double>& u, std::vector<std::array<double, 2>>& out) {
    for (int k = 0; k < nf; ++k) work[k] = u[k];
    fft_complex(work, false);
    out.assign(size_t(mf) + 1, {0.0, 0.0});
    for (int m = 1; m <= mf; ++m) {
      // u_m e^{im th}: coefficient work[m]*2/nf gives (cos,sin) pair
      std::complex<double> um = work[m] * (2.0 / nf);
      // antiderivative: divide by im
      std::complex<double> fm = um / std::complex<double>(0.0, double(m));
      out[m] = {fm.real(), -fm.imag()};  // series sum_m Re(fm e^{im th}) form
    }
  };
  std::vector<double> u(nf);
  for (int k = 0; k < nf; ++k) { double P = 1 + b0[k]; u[k] = 1.0 / P - 1.0; }
  antider(u, ring.fm[0]);
  for (int k = 0; k < nf; ++k) { double P = 1 + b0[k]; u[k] = -b1[k] / (P * P); }
  antider(u, ring.fm[1]);
  for (int k = 0; k < nf; ++k) {
    double P = 1 + b0[k];
    u[k] = (2 * b1[k] * b1[k] - b2[k] * P) / (P * P * P);
  }
  antider(u, ring.fm[2]);
  return ring;
}

BSlots BProfile::slots(const Ring& ring, double theta) const {
  BSlots sl;
  if (zero_) return sl;
  const int M = int(ring.bm[0].size()) - 1;
  for (int l = 0; l < 3; ++l) {
    if (ring.bm[l].empty()) continue;
    sl.B[l][0] = ring.bm[l][0][0];
    for (int m = 1; m <= M; ++m) {
      double A = ring.bm[l][m][0], B = ring.bm[l][m][1];
      double cm = std::cos(m * theta), sm = std::sin(m * theta);
      double a = A, b = B;
      for (int k = 0; k + l <= 3; ++k) {
        sl.B[l][k] += a * cm + b * sm;
        double na = m * b, nb = -m * a;  // one theta derivative rotates (a,b)
        a = na;
        b = nb;
      }
    }
    // k range where l+k <= 3 handled above; mode 0 contributes only at k=0
  }
  for (int l = 0; l < 3; ++l) {
    for (size_t m = 1; m < ring.fm[l].size(); ++m) {
      sl.F[l] += ring.fm[l][m][0] * std::cos(m * theta) + ring.fm[l][m][1] * std::sin(m * theta);
    }
  }
  return sl;
}

BSlots BProfile::slots(double theta, double s) const {
  if (zero_) return BSlots{};
  return slots(prepare(s), theta);
}

double BProfile::intb_residual(double s) const {
  if (zero_) return 0.0;
  Ring ring = prepare(s);
  const int nf = 512;
  double G = 0;
  for (int k = 0; k < nf; ++k) {
    double th = 2 * pi * k / nf;
    double b = slots(ring, th).B[0][0];
    G += b / (1 + b);
  }
  return G * 2 * pi / nf;
}

double BProfile::min_one_plus_b(double s) const {
  if (zero_) return 1.0;
  Ring ring = prepare(s);
  const int nf = 512;
  double m = 1e300;
  for (int k = 0; k < nf; ++k)
    m = std::min(m, 1.0 + slots(ring, 2 * pi * k / nf).B[0][0]);
  return m;
}

std::string BProfile::to_text() const {
  std::ostringstream os;
  os.precision(17);
  if (tab_) {
    os << "bprofile v1\nn_s " << sg_.size() << " n_modes " << n_modes_ << "\n";
    for (size_t k = 0; k < sg_.size(); ++k) {
      os << sg_[k];
      for (double v : rows_[k]) os << " " << v;
      os << "\n";
    }
  } else {
    // sample the analytic profile onto a default table
    std::vector<double> sg;
    for (int k = 0; k <= 200; ++k) sg.push_back(k * 1.0);
    os << "bprofile v1\nn_s " << sg.size() << " n_modes " << n_modes_ << "\n";
    std::vector<std::array<double, 2>> mm;
    for (double s : sg) {
      mode_data(s, 0, mm);
      os << s;
      os << " " << (mm.empty() ? 0.0 : mm[0][0]);
      for (int m = 1; m <= n_modes_; ++m) os << " " << mm[m][0] << " " << mm[m][1];
      os << "\n";
    }
  }
  return os.str();
}

BProfile BProfile::from_text(const std::string& text, const std::vector<double>&) {
  std::istringstream is(text);
  std::string tag, ver, key;
  size_t ns = 0;
  int nm = 0;
  is >> tag >> ver;
  if (tag != "bprofile") throw std::runtime_error("BProfile::from_text: bad header");
  is >> key >> ns >> key >> nm;
  std::vector<double> sg(ns);
  std::vector<std::vector<double>> rows(ns, std::vector<double>(2 * nm + 1));
  for (size_t k = 0; k < ns; ++k) {
    is >> sg[k];
    for (auto& v : rows[k]) is >> v;
  }
  return tabulated(std::move(sg), std::move(rows), nm);
}

// ---------------------------------------------------------------------------
// change of variables and g_a
// ---------------------------------------------------------------------------
ChartPoint change_of_variables(double s, double q, double theta, const BProfile& b) {
  BSlots sl = b.slots(theta, s);
  double P = sl.P();
  if (P <= 0.5) throw std::invalid_argument("change_of_variables: 1+b <= 1/2");
  double r = 0.5 * (s + q);
  ChartPoint p;
  p.sp = P * s - sl.B[0][1] * sl.B[0][1] / P * q;
  p.qp = q / P;
  p.thp = theta - (q / r) * sl.B[0][1] / (P * P) + sl.F[0];
  return p;
}

namespace {
// polar (t,r,theta)-components -> Cartesian Sym3 at angle theta, radius r
Sym3 polar_to_cart(double g_tt, double g_tr, double g_tth, double g_rr, double g_rth,
                   double g_thth, double r, double theta) {
  double c = std::cos(theta), s = std::sin(theta);
  double xh[2] = {c, s}, th[2] = {-s, c};
  Sym3 g;
  g(0, 0) = g_tt;
  for (int i = 0; i < 2; ++i) g(0, i + 1) = g_tr * xh[i] + g_tth * th[i] / r;
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      g(i + 1, j + 1) = g_rr * xh[i] * xh[j] + (g_rth / r) * (xh[i] * th[j] + th[i] * xh[j]) +
                        (g_thth / (r * r)) * th[i] * th[j];
  return g;
}
}  // namespace

Sym3 metric_ga(double sp, double qp, double thp, const ACoeffs& a) {
  double rp = 0.5 * (sp + qp);
  double Rad = rp + a.a(thp) * qp;
  if (!(Rad > 0)) throw std::invalid_argument("metric_ga: degenerate radius r' + a q' <= 0");
  double J = a.J(thp);
  // null-polar components: g_s'q' = 1/2, g_th'th' = Rad^2, g_q'th' = J/2
  // to (t', r', th'): t-row (1,-1), r-row (1,1) as usual
  double g_ss = 0, g_sq = 0.5, g_qq = 0, g_sth = 0, g_qth = J / 2, g_thth = Rad * Rad;
  double g_tt = g_ss - 2 * g_sq + g_qq;
  double g_tr = g_ss - g_qq;
  double g_rr = g_ss + 2 * g_sq + g_qq;
  double g_tth = g_sth - g_qth;
  double g_rth = g_sth + g_qth;
  return polar_to_cart(g_tt, g_tr, g_tth, g_rr, g_rth, g_thth, rp, thp);
}

double h_of(const BSlots& sl, const ACoeffs& a, double theta) {
  double P = sl.P();
  double thp = theta + sl.F[0];
  return 2 * a.a(thp) / (P * P) + 1.0 / (P * P) - 1.0 - 2 * sl.B[0][2] / P +
         sl.B[0][1] * sl.B[0][1] / (P * P);
}

double h_of(const BProfile& b, const ACoeffs& a, double theta, double s) {
  return h_of(b.slots(theta, s), a, theta);
}

double h_of_ds(const BProfile& b, const ACoeffs& a, double theta, double s) {
  BSlots sl = b.slots(theta, s);
  double P = sl.P();
  double thp = theta + sl.F[0];
  double B10 = sl.B[1][0], B01 = sl.B[0][1], B02 = sl.B[0][2], B11 = sl.B[1][1],
         B12 = sl.B[1][2], F1 = sl.F[1];
  return 2 * a.a_p(thp) * F1 / (P * P) - 4 * a.a(thp) * B10 / (P * P * P) -
         2 * B10 / (P * P * P) - 2 * B12 / P + 2 * B02 * B10 / (P * P) +
         2 * B01 * B11 / (P * P) - 2 * B01 * B01 * B10 / (P * P * P);
}

double sigma0_UL(const BSlots& sl, double s) { return s * sl.P() * sl.F[1]; }

// ---------------------------------------------------------------------------
// Background metric jet
// ---------------------------------------------------------------------------
bool Background::is_minkowski() const {
  return b_.is_zero() && a_.a0 == 0 && a_.a1 == 0 && a_.a2 == 0 && a_.J_zero();
}

Sym3 Background::g(double t, double r, double theta) const {
  return jet(t, r, theta).g;
}

MetricJet Background::jet(double t, double r, double theta, JetMask mask) const {
  double s = t + r;
  if (b_.is_zero()) {
    static const BProfile::Ring empty{};
    return jet(empty, t, r, theta, mask);
  }
  return jet(b_.prepare(s), t, r, theta, mask);
}

MetricJet Background::jet(const BProfile::Ring& ring, double t, double r, double theta,
                          JetMask mask) const {
  double s = t + r, q = r - t;
  double chi = cut_.chi(q), chip = cut_.chi_p(q);
  MetricJet out;
  if ((chi == 0.0 && chip == 0.0) || is_minkowski()) {
    out.g = Sym3::minkowski();
    return out;
  }

  BSlots sl = b_.is_zero() ? BSlots{} : b_.slots(ring, theta);
  apply_mask(sl, mask);

  // seeded slot variables: value + (d/ds, d/dq, d/dth)
  D3 sD(s, 1, 0, 0), qD(q, 0, 1, 0), thD(theta, 0, 0, 1);
  D3 rD = 0.5 * (sD + qD);
  D3 b00(sl.B[0][0], sl.B[1][0], 0, sl.B[0][1]);
  D3 b01(sl.B[0][1], sl.B[1][1], 0, sl.B[0][2]);
  D3 b02(sl.B[0][2], sl.B[1][2], 0, sl.B[0][3]);
  D3 b10(sl.B[1][0], sl.B[2][0], 0, sl.B[1][1]);
  D3 b11(sl.B[1][1], sl.B[2][1], 0, sl.B[1][2]);
  D3 P = 1.0 + b00;
  D3 f0(sl.F[0], sl.F[1], 0, 1.0 / P.v - 1.0);
  D3 f1(sl.F[1], sl.F[2], 0, -sl.B[1][0] / (P.v * P.v));

  // chart Jacobian entries (hand-derived; D3 supplies their derivatives)
  D3 W = b01 * b01 / P;
  D3 Ws = 2.0 * b01 * b11 / P - b01 * b01 * b10 / (P * P);
  D3 Wth = 2.0 * b01 * b02 / P - b01 * b01 * b01 / (P * P);
  D3 V = b01 / (P * P);
  D3 Vs = b11 / (P * P) - 2.0 * b01 * b10 / (P * P * P);
  D3 Vth = b02 / (P * P) - 2.0 * b01 * b01 / (P * P * P);

  D3 Js[3], Jq[3], Jt[3];
  Js[0] = P + sD * b10 - qD * Ws;
  Js[1] = -W;
  Js[2] = sD * b01 - qD * Wth;
  Jq[0] = -qD * b10 / (P * P);
  Jq[1] = 1.0 / P;
  Jq[2] = -qD * b01 / (P * P);
  Jt[0] = qD / (2.0 * rD * rD) * V - (qD / rD) * Vs + f1;
  Jt[1] = -sD / (2.0 * rD * rD) * V;
  Jt[2] = 1.0 / P - (qD / rD) * Vth;

  // primed coordinates with first derivatives equal to the Jacobian values
  D3 spv(P.v * s - W.v * q, Js[0].v, Js[1].v, Js[2].v);
  D3 qpv(q / P.v, Jq[0].v, Jq[1].v, Jq[2].v);
  D3 thpv(theta - (q / r) * V.v + f0.v, Jt[0].v, Jt[1].v, Jt[2].v);

  D3 rp = 0.5 * (spv + qpv);
  D3 A = a_.a0 + a_.a1 * cos(thpv) + a_.a2 * sin(thpv);
  D3 Jpv(0.0);
  if (!a_.J_zero()) {
    Jpv = a_.J_cos.empty() ? D3(0.0) : D3(a_.J_cos[0]);
    for (size_t m = 1; m < a_.J_cos.size(); ++m) Jpv = Jpv + a_.J_cos[m] * cos(double(m) * thpv);
    for (size_t m = 1; m < a_.J_sin.size(); ++m) Jpv = Jpv + a_.J_sin[m] * sin(double(m) * thpv);
  }
  D3 Rad = rp + A * qpv;

  // pulled-back g_a in (s,q,theta) components
  D3 ga[3][3];
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = mu; nu < 3; ++nu) {
      ga[mu][nu] = 0.5 * (Js[mu] * Jq[nu] + Js[nu] * Jq[mu]) + Rad * Rad * Jt[mu] * Jt[nu] +
                   0.5 * Jpv * (Jt[mu] * Jq[nu] + Jt[nu] * Jq[mu]);
    }

  // blend with Minkowski (m_sq = 1/2, m_thth = r^2)
  D3 chiD(chi, 0, chip, 0);
  D3 gb[3][3];
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = mu; nu < 3; ++nu) {
      D3 mink(0.0);
      if (mu == 0 && nu == 1) mink = D3(0.5);
      if (mu == 2 && nu == 2) mink = rD * rD;
      gb[mu][nu] = chiD * ga[mu][nu] + (1.0 - chiD) * mink;
    }

  // (s,q,th) components -> (t,r,th) components (constant linear relabel)
  D3 g_tt = gb[0][0] - 2.0 * gb[0][1] + gb[1][1];
  D3 g_tr = gb[0][0] - gb[1][1];
  D3 g_rr = gb[0][0] + 2.0 * gb[0][1] + gb[1][1];
  D3 g_tth = gb[0][2] - gb[1][2];
  D3 g_rth = gb[0][2] + gb[1][2];
  D3 g_thth = gb[2][2];

  // Cartesian components as D3 (angular factors carry their own th-derivatives)
  D3 c = cos(thD), sn = sin(thD);
  D3 xh[2] = {c, sn}, tv[2] = {-sn, c};
  D3 comp[6];
  comp[0] = g_tt;
  comp[1] = g_tr * xh[0] + g_tth * tv[0] / rD;
  comp[2] = g_tr * xh[1] + g_tth * tv[1] / rD;
  auto gij = [&](int i, int j) {
    return g_rr * xh[i] * xh[j] + (g_rth / rD) * (xh[i] * tv[j] + tv[i] * xh[j]) +
           (g_thth / (rD * rD)) * tv[i] * tv[j];
  };
  comp[3] = gij(0, 0);
  comp[4] = gij(0, 1);
  comp[5] = gij(1, 1);

  // rotate derivative directions (s,q,th) -> (t, x1, x2)
  double cc = std::cos(theta), ss = std::sin(theta);
  for (int k = 0; k < 6; ++k) {
    out.g.a[k] = comp[k].v;
    double Xs = comp[k].d[0], Xq = comp[k].d[1], Xth = comp[k].d[2];
    double Xt = Xs - Xq, Xr = Xs + Xq;
    out.dg[0].a[k] = Xt;
    out.dg[1].a[k] = cc * Xr - ss / r * Xth;
    out.dg[2].a[k] = ss * Xr + cc / r * Xth;
  }
  return out;
}

// ---------------------------------------------------------------------------
// finite-difference Christoffel / Ricci
// ---------------------------------------------------------------------------
namespace {
std::array<Sym3, 3> metric_grad_fd(const MetricFunc& g, double t, double x1, double x2,
                                   double h) {
  std::array<Sym3, 3> d;
  auto at = [&](int k, double sgn) {
    double p[3] = {t, x1, x2};
    p[k] += sgn * h;
    return g(p[0], p[1], p[2]);
  };
  for (int k = 0; k < 3; ++k) {
    Sym3 plus = at(k, 1.0), minus = at(k, -1.0);
    for (int c = 0; c < 6; ++c) d[k].a[c] = (plus.a[c] - minus.a[c]) / (2 * h);
  }
  return d;
}

std::array<Sym3, 3> christoffel_at(const MetricFunc& gf, double t, double x1, double x2,
                                   double h) {
  Sym3 g = gf(t, x1, x2);
  Sym3 ginv = g.inverse();
  auto dg = metric_grad_fd(gf, t, x1, x2, h);
  std::array<Sym3, 3> gam;
  for (int al = 0; al < 3; ++al)
    for (int mu = 0; mu < 3; ++mu)
      for (int nu = mu; nu < 3; ++nu) {
        double s = 0;
        for (int rho = 0; rho < 3; ++rho)
          s += 0.5 * ginv(al, rho) *
               (dg[mu](rho, nu) + dg[nu](rho, mu) - dg[rho](mu, nu));
        gam[al](mu, nu) = s;
      }
  return gam;
}
}  // namespace

std::array<Sym3, 3> christoffel_fd(const MetricFunc& g, double t, double x1, double x2,
                                   double h) {
  return christoffel_at(g, t, x1, x2, h);
}

Sym3 ricci_fd(const MetricFunc& gf, double t, double x1, double x2, double h) {
  auto gam0 = christoffel_at(gf, t, x1, x2, h);
  std::array<std::array<Sym3, 3>, 3> gp, gm;  // shifted Christoffels per direction
  for (int k = 0; k < 3; ++k) {
    double p[3] = {t, x1, x2};
    p[k] += h;
    gp[k] = christoffel_at(gf, p[0], p[1], p[2], h);
    p[k] -= 2 * h;
    gm[k] = christoffel_at(gf, p[0], p[1], p[2], h);
  }
  Sym3 R;
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = mu; nu < 3; ++nu) {
      double v = 0;
      // d_alpha Gamma^alpha_{mu nu}
      for (int al = 0; al < 3; ++al)
        v += (gp[al][al](mu, nu) - gm[al][al](mu, nu)) / (2 * h);
      // - d_nu Gamma^alpha_{mu alpha}
      for (int al = 0; al < 3; ++al)
        v -= (gp[nu][al](mu, al) - gm[nu][al](mu, al)) / (2 * h);
      // + Gamma^alpha_{alpha beta} Gamma^beta_{mu nu} - Gamma^alpha_{nu beta} Gamma^beta_{mu alpha}
      for (int al = 0; al < 3; ++al)
        for (int be = 0; be < 3; ++be)
          v += gam0[al](al, be) * gam0[be](mu, nu) - gam0[al](nu, be) * gam0[be](mu, al);
      R(mu, nu) = v;
    }
  return R;
}

}  // namespace gwlab
