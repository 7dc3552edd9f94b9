#include "gwlab/gauge.hpp"

namespace gwlab {

namespace {

// gradients of all six components: D[0] = gt (exact), D[1], D[2] discrete
void metric_gradients(const MetricGrids& m, std::array<TensorGrid, 3>& D) {
  const GridSpec& sp = m.g.spec;
  D[0] = m.gt;
  D[1] = TensorGrid(sp);
  D[2] = TensorGrid(sp);
  for (int c = 0; c < 6; ++c) {
    Grid d1, d2;
    cartesian_grad(m.g.c[c], d1, d2);
    D[1].c[c] = d1;
    D[2].c[c] = d2;
  }
}

}  // namespace

std::array<double, 3> christoffel_H_point(const Sym3& g, const std::array<Sym3, 3>& dg) {
  Sym3 ginv = g.inverse();
  std::array<double, 3> H{};
  for (int al = 0; al < 3; ++al) {
    double s = 0;
    for (int lam = 0; lam < 3; ++lam)
      for (int bet = 0; bet < 3; ++bet) {
        double gam1 = 0;  // Gamma^al_{lam bet} = 1/2 g^{al rho}(...)
        for (int rho = 0; rho < 3; ++rho)
          gam1 += 0.5 * ginv(al, rho) *
                  (dg[lam](rho, bet) + dg[bet](rho, lam) - dg[rho](lam, bet));
        s += ginv(lam, bet) * gam1;
      }
    H[al] = s;
  }
  return H;
}

std::array<Grid, 3> christoffel_H(const MetricGrids& m) {
  const GridSpec& sp = m.g.spec;
  std::array<TensorGrid, 3> D;
  metric_gradients(m, D);
  std::array<Grid, 3> H = {Grid(sp), Grid(sp), Grid(sp)};
  for (int j = 0; j < sp.n_r; ++j)
    for (int i = 0; i < sp.n_theta; ++i) {
      Sym3 g = m.g.at(j, i);
      std::array<Sym3, 3> dg = {D[0].at(j, i), D[1].at(j, i), D[2].at(j, i)};
      auto h = christoffel_H_point(g, dg);
      for (int al = 0; al < 3; ++al) H[al].at(j, i) = h[al];
    }
  return H;
}

std::array<Grid, 3> wave_gauge_H_divergence(const MetricGrids& m) {
  const GridSpec& sp = m.g.spec;
  // inverse metric grids
  TensorGrid ginv(sp), ginv_t(sp);
  for (int j = 0; j < sp.n_r; ++j)
    for (int i = 0; i < sp.n_theta; ++i) {
      Sym3 g = m.g.at(j, i);
      Sym3 gi = g.inverse();
      ginv.set(j, i, gi);
      // d_t g^{-1} = -g^{-1} (d_t g) g^{-1}
      Sym3 gt = m.gt.at(j, i), d;
      for (int mu = 0; mu < 3; ++mu)
        for (int nu = mu; nu < 3; ++nu) {
          double s = 0;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) s += gi(mu, a) * gt(a, b) * gi(b, nu);
          d(mu, nu) = -s;
        }
      ginv_t.set(j, i, d);
    }
  // spatial derivatives of the inverse
  std::array<TensorGrid, 3> Dinv;
  Dinv[0] = ginv_t;
  Dinv[1] = TensorGrid(sp);
  Dinv[2] = TensorGrid(sp);
  for (int c = 0; c < 6; ++c) {
    Grid d1, d2;
    cartesian_grad(ginv.c[c], d1, d2);
    Dinv[1].c[c] = d1;
    Dinv[2].c[c] = d2;
  }
  std::array<TensorGrid, 3> D;
  metric_gradients(m, D);

  std::array<Grid, 3> H = {Grid(sp), Grid(sp), Grid(sp)};
  for (int j = 0; j < sp.n_r; ++j)
    for (int i = 0; i < sp.n_theta; ++i) {
      Sym3 gi = ginv.at(j, i);
      std::array<Sym3, 3> dg = {D[0].at(j, i), D[1].at(j, i), D[2].at(j, i)};
      std::array<Sym3, 3> dgi = {Dinv[0].at(j, i), Dinv[1].at(j, i), Dinv[2].at(j, i)};
      for (int al = 0; al < 3; ++al) {
        double div = 0;
        for (int lam = 0; lam < 3; ++lam) div += dgi[lam](lam, al);
        double tr = 0;
        for (int bet = 0; bet < 3; ++bet) {
          double s = 0;
          for (int lam = 0; lam < 3; ++lam)
            for (int mu = 0; mu < 3; ++mu) s += gi(lam, mu) * dg[bet](lam, mu);
          tr += gi(al, bet) * s;
        }
        H[al].at(j, i) = -div - 0.5 * tr;
      }
    }
  return H;
}

Sym3 P_quadratic(const Sym3& ginv, const Sym3& g, const std::array<Sym3, 3>& D) {
  // first-kind Christoffels and derived contractions
  double G1[3][3][3];  // G1[rho][mu][nu]
  for (int rho = 0; rho < 3; ++rho)
    for (int mu = 0; mu < 3; ++mu)
      for (int nu = 0; nu < 3; ++nu)
        G1[rho][mu][nu] = 0.5 * (D[mu](rho, nu) + D[nu](rho, mu) - D[rho](mu, nu));
  double G2[3][3][3];  // G2[al][mu][nu]
  for (int al = 0; al < 3; ++al)
    for (int mu = 0; mu < 3; ++mu)
      for (int nu = 0; nu < 3; ++nu) {
        double s = 0;
        for (int rho = 0; rho < 3; ++rho) s += ginv(al, rho) * G1[rho][mu][nu];
        G2[al][mu][nu] = s;
      }
  double H[3];
  for (int al = 0; al < 3; ++al) {
    double s = 0;
    for (int lam = 0; lam < 3; ++lam)
      for (int bet = 0; bet < 3; ++bet) s += ginv(lam, bet) * G2[al][lam][bet];
    H[al] = s;
  }
  // d_kappa of the inverse metric
  Sym3 DI[3];
  for (int k = 0; k < 3; ++k)
    for (int a = 0; a < 3; ++a)
      for (int r = a; r < 3; ++r) {
        double s = 0;
        for (int l = 0; l < 3; ++l)
          for (int m = 0; m < 3; ++m) s += ginv(a, l) * D[k](l, m) * ginv(m, r);
        DI[k](a, r) = -s;
      }
  double Gtr[3];  // Gamma^al_{al beta}
  for (int be = 0; be < 3; ++be) {
    double s = 0;
    for (int al = 0; al < 3; ++al) s += G2[al][al][be];
    Gtr[be] = s;
  }

  auto R1st = [&](int mu, int nu) {
    double t1 = 0;
    for (int al = 0; al < 3; ++al)
      for (int rho = 0; rho < 3; ++rho) t1 += DI[al](al, rho) * G1[rho][mu][nu];
    double t2 = 0;
    for (int al = 0; al < 3; ++al)
      for (int rho = 0; rho < 3; ++rho) t2 += 0.5 * DI[nu](al, rho) * D[mu](al, rho);
    double t3 = 0;
    for (int be = 0; be < 3; ++be) t3 += Gtr[be] * G2[be][mu][nu];
    double t4 = 0;
    for (int al = 0; al < 3; ++al)
      for (int be = 0; be < 3; ++be) t4 += G2[al][nu][be] * G2[be][mu][al];
    return t1 - t2 + t3 - t4;
  };
  // first-order part of g_{mu rho} d_nu H^rho
  auto Y = [&](int nu, int mu) {
    double s = 0;
    for (int rho = 0; rho < 3; ++rho) {
      double x = 0;
      for (int sg = 0; sg < 3; ++sg)
        for (int al = 0; al < 3; ++al)
          for (int be = 0; be < 3; ++be)
            x += (DI[nu](rho, sg) * ginv(al, be) + ginv(rho, sg) * DI[nu](al, be)) *
                 G1[sg][al][be];
      s += g(mu, rho) * x;
    }
    return s;
  };

  Sym3 P;
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = mu; nu < 3; ++nu) {
      double hd = 0;
      for (int rho = 0; rho < 3; ++rho) hd += H[rho] * D[rho](mu, nu);
      P(mu, nu) = 2.0 * R1st(mu, nu) - Y(nu, mu) - Y(mu, nu) - hd;
    }
  return P;
}

double support_violation(const Grid& phi, double R, double t) {
  const GridSpec& sp = phi.spec;
  double viol = 0;
  int j_sponge = sp.n_r - 16;  // partially frozen fields are not support
  for (int j = 0; j < j_sponge; ++j) {
    if (sp.r(j) - t < R + 0.5) continue;
    for (int i = 0; i < sp.n_theta; ++i) viol = std::max(viol, std::abs(phi.at(j, i)));
  }
  return viol;
}

GaugeSource G_source(const Grid& phi, const Grid& phi_t, const std::vector<double>& h_row,
                     const std::vector<double>& h_row_ds, const Background& bg, double t,
                     GlMultiplier mult) {
  const GridSpec& sp = phi.spec;
  const CutoffSpec& cut = bg.cutoff();
  GaugeSource G;
  G.gl = Grid(sp);
  G.gu = Grid(sp);
  G.gl_t = Grid(sp);
  G.gu_t = Grid(sp);
  G.Gt = Grid(sp);
  G.G1 = Grid(sp);
  G.G2 = Grid(sp);
  G.gl_r = Grid(sp);
  G.gl_th = Grid(sp);
  G.gu_r = Grid(sp);
  G.gu_th = Grid(sp);
  Grid gl_flux(sp);

  // dq phi = (d_r phi - phi_t)/2 and its time derivative; phi_tt is taken at
  // flat-wave order (the curved correction to the flux derivative is of the
  // same class as the remainders already neglected in the gl_t consumers)
  Grid phr = dr(phi), phtr = dr(phi_t), lap = laplacian(phi);
  const double dr_h = sp.dr();

  // per-ray inward prefix integrals of the phi flux (trapezoid from the outer
  // boundary, where the integrand vanishes); h-part in closed form
  const int nr = sp.n_r, nt = sp.n_theta;
  std::vector<double> I(nt, 0.0), I_t(nt, 0.0), f_prev(nt), ft_prev(nt);
  std::vector<std::vector<double>> Iflux(nr, std::vector<double>(nt)),
      Iflux_t(nr, std::vector<double>(nt));
  for (int j = nr - 1; j >= 0; --j) {
    for (int i = 0; i < nt; ++i) {
      double r = sp.r(j);
      double dq = 0.5 * (phr.at(j, i) - phi_t.at(j, i));
      double dq_t = 0.5 * (phtr.at(j, i) - lap.at(j, i));
      double f = 2.0 * dq * dq * r;
      double ft = 4.0 * dq * dq_t * r;
      if (j == nr - 1) {
        Iflux[j][i] = 0.0;
        Iflux_t[j][i] = 0.0;
      } else {
        Iflux[j][i] = I[i] - 0.5 * dr_h * (f + f_prev[i]);
        Iflux_t[j][i] = I_t[i] - 0.5 * dr_h * (ft + ft_prev[i]);
      }
      I[i] = Iflux[j][i];
      I_t[i] = Iflux_t[j][i];
      f_prev[i] = f;
      ft_prev[i] = ft;
    }
  }

  // smooth onset: the Upsilon(r/t) construction is a wave-zone device; near
  // t = 0 its support reaches the origin where the 1/r factors are unbounded,
  // so the source ramps in over t in [2, 4]
  const double psi_on = Smoothstep::f((t - 2.0) / 2.0);
  const double psi_on_t = Smoothstep::df((t - 2.0) / 2.0) / 2.0;

  const BProfile& bp = bg.bprofile();
  for (int j = 0; j < nr; ++j) {
    double r = sp.r(j), q = r - t, s = t + r;
    double ups = cut.upsilon_rt(r, t) * psi_on;
    double ups_t = cut.d_dt_upsilon_rt(r, t) * psi_on + cut.upsilon_rt(r, t) * psi_on_t;
    // antiderivative of the h multiplier from infinity to r: A(q) with
    // A' = M, A(inf) = 0, plus its time derivative -A'(q)·(dq/dt = -1) = M(q)
    double anti = 0, anti_t = 0;
    switch (mult) {
      case GlMultiplier::curvature_matched:
        anti = -0.5 * (cut.W_antideriv(q) - 1.0);
        anti_t = 0.5 * cut.W(q);
        break;
      case GlMultiplier::d2q_qchi:
        anti = cut.W_antideriv(q) - 1.0;
        anti_t = -cut.W(q);
        break;
      case GlMultiplier::chi_prime:
        anti = cut.chi(q) - 1.0;
        anti_t = -cut.chi_p(q);
        break;
    }
    BProfile::Ring ring;
    bool have_ring = !bp.is_zero();
    if (have_ring) ring = bp.prepare(s);
    double ups_r = cut.d_dr_upsilon_rt(r, t) * psi_on;
    // the q -> r derivative of the h antiderivative is the multiplier itself
    double anti_r = -anti_t;
    for (int i = 0; i < nt; ++i) {
      double h = h_row[i], h_ds = h_row_ds[i];
      double hterm = -h * anti;
      double gl = (ups / r) * (Iflux[j][i] + hterm);
      double gl_t = (ups_t / r) * (Iflux[j][i] + hterm) +
                    (ups / r) * (Iflux_t[j][i] - 2.0 * h_ds * anti - h * anti_t);
      // analytic radial derivative of the h part; the flux part is smooth and
      // is differenced on the grid afterwards
      double glh_r = (ups_r / r - ups / (r * r)) * hterm + (ups / r) * (-h * anti_r);
      double gu = 0, gu_t = 0, gu_r = 0;
      if (have_ring) {
        BSlots sl = bp.slots(ring, sp.theta(i));
        double sig = sigma0_UL(sl, s);
        double sig_ds = sl.P() * sl.F[1] + s * (sl.B[1][0] * sl.F[1] + sl.P() * sl.F[2]);
        gu = 0.5 * sig * cut.chi_p(q);
        gu_t = 0.5 * (sig_ds * cut.chi_p(q) - sig * cut.chi_pp(q));
        gu_r = 0.5 * (sig_ds * cut.chi_p(q) + sig * cut.chi_pp(q));
      }
      G.gl.at(j, i) = gl;
      G.gl_t.at(j, i) = gl_t;
      G.gl_r.at(j, i) = glh_r;  // flux part added below
      gl_flux.at(j, i) = (ups / r) * Iflux[j][i];
      G.gu.at(j, i) = gu;
      G.gu_t.at(j, i) = gu_t;
      G.gu_r.at(j, i) = gu_r;
      double th = sp.theta(i), c = std::cos(th), sn = std::sin(th);
      G.Gt.at(j, i) = gl;          // G = gl L + gu U
      G.G1.at(j, i) = gl * c - gu * sn;
      G.G2.at(j, i) = gl * sn + gu * c;
    }
  }
  G.gl_r += dr(gl_flux);
  G.gl_th = dtheta(G.gl);
  G.gu_th = dtheta(G.gu);
  return G;
}

std::array<double, 3> G_tilde_point(const Sym3& gtil, const MetricJet& full,
                                    const MetricJet& masked) {
  // high-pattern part of the background gradient
  std::array<Sym3, 3> dhat;
  for (int k = 0; k < 3; ++k) dhat[k] = full.dg[k] - masked.dg[k];
  Sym3 gb_inv = full.g.inverse();
  // raise gtil with the background inverse
  Sym3 gt_up;
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = mu; nu < 3; ++nu) {
      double s = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) s += gb_inv(mu, a) * gtil(a, b) * gb_inv(b, nu);
      gt_up(mu, nu) = s;
    }
  std::array<double, 3> out{};
  for (int al = 0; al < 3; ++al) {
    double s = 0;
    for (int lam = 0; lam < 3; ++lam)
      for (int bet = 0; bet < 3; ++bet) {
        for (int rho = 0; rho < 3; ++rho) {
          double gam_hat =
              0.5 * (dhat[lam](rho, bet) + dhat[bet](rho, lam) - dhat[rho](lam, bet));
          s += (gt_up(lam, bet) * gb_inv(al, rho) + gb_inv(lam, bet) * gt_up(al, rho)) *
               gam_hat;
        }
      }
    out[al] = -s;
  }
  return out;
}

std::array<Grid, 3> G_tilde(const TensorGrid& gtil, const Background& bg, double t) {
  const GridSpec& sp = gtil.spec;
  std::array<Grid, 3> out = {Grid(sp), Grid(sp), Grid(sp)};
  if (bg.bprofile().is_zero()) return out;
  for (int j = 0; j < sp.n_r; ++j) {
    double r = sp.r(j);
    double s = t + r;
    if (bg.trivial_at(r - t)) continue;
    BProfile::Ring ring = bg.bprofile().prepare(s);
    for (int i = 0; i < sp.n_theta; ++i) {
      double th = sp.theta(i);
      MetricJet full = bg.jet(ring, t, r, th, JetMask::full);
      MetricJet masked = bg.jet(ring, t, r, th, JetMask::low_only);
      auto v = G_tilde_point(gtil.at(j, i), full, masked);
      for (int al = 0; al < 3; ++al) out[al].at(j, i) = v[al];
    }
  }
  return out;
}

GaugeResidual gauge_residual(const MetricGrids& m, const std::array<Grid, 3>& Fb,
                             const GaugeSource& G, const std::array<Grid, 3>& Gt,
                             const WeightSpec& w, double t) {
  const GridSpec& sp = m.g.spec;
  auto H = christoffel_H(m);
  GaugeResidual out;
  std::array<const Grid*, 3> Gc = {&G.Gt, &G.G1, &G.G2};
  Grid dens(sp);
  for (int al = 0; al < 3; ++al) {
    out.res[al] = Grid(sp);
    for (int j = 0; j < sp.n_r; ++j)
      for (int i = 0; i < sp.n_theta; ++i) {
        double v = H[al].at(j, i) - Fb[al].at(j, i) - Gc[al]->at(j, i) - Gt[al].at(j, i);
        out.res[al].at(j, i) = v;
        out.sup = std::max(out.sup, std::abs(v));
        dens.at(j, i) += w.value(sp.r(j) - t) * v * v;
      }
  }
  out.weighted_l2 = std::sqrt(std::max(0.0, integrate(dens)));
  return out;
}

}  // namespace gwlab
