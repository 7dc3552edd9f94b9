#include "gwlab/diagnostics.hpp"

#include <sstream>

namespace gwlab {

double weighted_energy(const FieldJet& u, const std::vector<VectorFieldId>& I,
                       const WeightSpec& family, double t) {
  if (I.size() > 2) throw std::invalid_argument("weighted_energy: |I| <= 2 at desk scale");
  const GridSpec& sp = u.u.spec;
  Grid zu = u.u, zu_t = u.ut;
  if (I.size() == 1) {
    apply_Z_jet(u, I[0], t, zu, zu_t);
  } else if (I.size() == 2) {
    Grid w1, w1t;
    apply_Z_jet(u, I[1], t, w1, w1t);
    // second application: values need (w1, w1t); the time slot of the result
    // uses the jet of w1 whose own utt would require a third time derivative,
    // so the |I| = 2 energy uses spatial members of d(Z^2 u) plus the exact
    // first time derivative of Z applied to (Zu, Zu_t)
    FieldJet j1{w1, w1t, Grid(sp)};
    Grid zzu = apply_Z(w1, &w1t, I[0], t);
    // time derivative of Z^2 u via applying the outer Z to the (value_t) pair
    Grid zzu_t = apply_Z(w1t, nullptr,
                         needs_time_derivative(I[0]) ? VectorFieldId::Omega12 : I[0], t);
    if (needs_time_derivative(I[0])) {
      // fall back: d_t(Z2 Z1 u) ~ Z2 d_t(Z1 u) + [d_t, Z2](Z1 u); the
      // commutator is a first-order spatial operator handled by apply_Z_jet
      Grid a, b;
      apply_Z_jet(j1, I[0], t, a, b);
      zzu = a;
      zzu_t = b;
    }
    zu = zzu;
    zu_t = zzu_t;
  }
  Grid d1, d2;
  cartesian_grad(zu, d1, d2);
  Grid dens(sp);
  for (int j = 0; j < sp.n_r; ++j) {
    double w = family.value(sp.r(j) - t);
    for (int i = 0; i < sp.n_theta; ++i)
      dens.at(j, i) = w * (zu_t.at(j, i) * zu_t.at(j, i) + d1.at(j, i) * d1.at(j, i) +
                           d2.at(j, i) * d2.at(j, i));
  }
  return std::sqrt(std::max(0.0, integrate(dens)));
}

double delta_h(const Grid& phi, const Grid& phi_t, const std::vector<double>& h_row) {
  const GridSpec& sp = phi.spec;
  Grid d1, d2;
  cartesian_grad(phi, d1, d2);
  Grid e(sp), m1(sp), m2(sp);
  for (int j = 0; j < sp.n_r; ++j)
    for (int i = 0; i < sp.n_theta; ++i) {
      double pt = phi_t.at(j, i);
      e.at(j, i) = pt * pt + d1.at(j, i) * d1.at(j, i) + d2.at(j, i) * d2.at(j, i);
      m1.at(j, i) = pt * d1.at(j, i);
      m2.at(j, i) = pt * d2.at(j, i);
    }
  double E = integrate(e), P1 = integrate(m1), P2 = integrate(m2);
  double ih = 0, ihc = 0, ihs = 0;
  for (int i = 0; i < sp.n_theta; ++i) {
    double th = sp.theta(i);
    ih += h_row[i];
    ihc += h_row[i] * std::cos(th);
    ihs += h_row[i] * std::sin(th);
  }
  double dth = sp.dtheta();
  return std::abs(ih * dth - E) + std::abs(ihc * dth + 2 * P1) + std::abs(ihs * dth + 2 * P2);
}

EnergyMarginSeries energy_inequality_margin(const std::vector<DiagRow>& rows, double eps) {
  EnergyMarginSeries out;
  for (size_t n = 1; n + 1 < rows.size(); ++n) {
    double dtc = rows[n + 1].t - rows[n - 1].t;
    if (dtc <= 0) continue;
    double dE = (rows[n + 1].qtt_w_phi - rows[n - 1].qtt_w_phi) / dtc;
    double lhs = dE + 0.5 * rows[n].flux_w_phi;
    double rhs = eps / (1.0 + rows[n].t) * rows[n].wgrad_phi;
    if (rhs <= 0) continue;
    out.t.push_back(rows[n].t);
    out.ratio.push_back(lhs / rhs);
    out.max_ratio = std::max(out.max_ratio, lhs / rhs);
  }
  return out;
}

HExtract extract_h(const Evolver::RunResult& run, const GridSpec& spec,
                   const CutoffSpec& cut, double T) {
  if (run.stream.times.empty() || run.snapshots.empty())
    throw std::invalid_argument("extract_h: run history missing (enable the extract stream)");
  const auto& st = run.stream;
  const int n_slices = int(st.times.size());

  HExtract out;
  // backward transport of beta from t = T:
  //   d_t beta = 2 S - (1 + 2 cLL) d_r beta
  Grid beta(spec);
  std::vector<Grid> beta_at_snap(run.snapshots.size(), Grid(spec));
  std::vector<char> snap_done(run.snapshots.size(), 0);

  auto rhs_beta = [&](const Grid& b, int slice_lo, double frac) {
    // linear interpolation of the stored coefficients between slices
    Grid br = dr(b);
    Grid out_g(spec);
    int hi = std::min(slice_lo + 1, n_slices - 1);
    for (size_t kk = 0; kk < out_g.v.size(); ++kk) {
      double cll = (1 - frac) * st.cLL[slice_lo].v[kk] + frac * st.cLL[hi].v[kk];
      double src = (1 - frac) * st.source[slice_lo].v[kk] + frac * st.source[hi].v[kk];
      out_g.v[kk] = 2 * src - (1 + 2 * cll) * br.v[kk];
    }
    return out_g;
  };

  auto mark_snapshots = [&](double t_now) {
    for (size_t m = 0; m < run.snapshots.size(); ++m) {
      if (snap_done[m]) continue;
      if (std::abs(run.snapshots[m].t - t_now) <= 0.5 * st.dt + 1e-12) {
        beta_at_snap[m] = beta;
        snap_done[m] = 1;
      }
    }
  };

  mark_snapshots(st.times.back());
  for (int n = n_slices - 1; n > 0; --n) {
    double h = st.times[n] - st.times[n - 1];  // positive; we march with -h
    int lo = n - 1;
    auto f1 = rhs_beta(beta, lo, 1.0);
    Grid btmp = beta;
    btmp.axpy(-h / 2, f1);
    auto f2 = rhs_beta(btmp, lo, 0.5);
    btmp = beta;
    btmp.axpy(-h / 2, f2);
    auto f3 = rhs_beta(btmp, lo, 0.5);
    btmp = beta;
    btmp.axpy(-h, f3);
    auto f4 = rhs_beta(btmp, lo, 0.0);
    beta.axpy(-h / 6, f1);
    beta.axpy(-h / 3, f2);
    beta.axpy(-h / 3, f3);
    beta.axpy(-h / 6, f4);
    Grid dmp = dissipation(beta);
    beta.axpy(0.02, dmp);
    mark_snapshots(st.times[n - 1]);
  }

  // flux integrals on each snapshot
  const int nt = spec.n_theta, nr = spec.n_r;
  for (size_t m = 0; m < run.snapshots.size(); ++m) {
    const Snapshot& snap = run.snapshots[m];
    double t = snap.t;
    Grid phr = dr(snap.phi), phth = dtheta(snap.phi);
    std::vector<double> row(nt, 0.0), cons_row(nt, 0.0);
    for (int i = 0; i < nt; ++i) {
      double acc = 0, acc_c = 0;
      for (int j = 0; j < nr; ++j) {
        double r = spec.r(j);
        double ups = cut.upsilon_rt(r, t);
        double flux = snap.extract_m[0].at(j, i) * snap.phi_t.at(j, i) +
                      snap.extract_m[1].at(j, i) * phr.at(j, i) +
                      snap.extract_m[2].at(j, i) * phth.at(j, i);
        acc += ups * (1.0 + beta_at_snap[m].at(j, i)) * flux * phr.at(j, i);
        acc_c += snap.phi_t.at(j, i) * phr.at(j, i) * r;
      }
      row[i] = 2.0 * acc * spec.dr();
      cons_row[i] = 2.0 * acc_c * spec.dr();
    }
    out.s_values.push_back(2 * t);
    // consistency: hcheck + 2 int dr phi dt phi r dr should be small
    double num = 0, den = 0;
    for (int i = 0; i < nt; ++i) {
      num += (row[i] + cons_row[i]) * (row[i] + cons_row[i]);
      den += std::max(row[i] * row[i], cons_row[i] * cons_row[i]);
    }
    out.consistency.push_back(den > 0 ? std::sqrt(num / den) : 0.0);
    out.h_rows.push_back(std::move(row));
  }
  out.beta = std::move(beta_at_snap);

  // psi extension past the final slice
  out.hprime_rows = out.h_rows;
  if (!out.h_rows.empty()) {
    const auto& last = out.h_rows.back();
    for (size_t m = 0; m < out.h_rows.size(); ++m) {
      double ps = psi_extend(out.s_values[m], T);
      for (int i = 0; i < nt; ++i)
        out.hprime_rows[m][i] = ps * out.h_rows[m][i] + (1 - ps) * last[i];
    }
  }

  // F1 / F2 split on the final snapshot
  {
    const Snapshot& snap = run.snapshots.back();
    TensorGrid g1 = snap.gtil;  // gtil1 differs by the k-peel; use the stored k
    const CutoffSpec& c = cut;
    for (int j = 0; j < nr; ++j) {
      double r = spec.r(j);
      double ups = c.upsilon_rt(r, snap.t);
      if (ups == 0) continue;
      for (int i = 0; i < nt; ++i) {
        double th = spec.theta(i), cc = std::cos(th), sn = std::sin(th);
        double dq[3] = {-1.0, cc, sn};
        double kv = 4 * ups * snap.k.at(j, i);
        for (int mu = 0; mu < 3; ++mu)
          for (int nu = mu; nu < 3; ++nu)
            g1.c[Sym3::index(mu, nu)].at(j, i) -= kv * dq[mu] * dq[nu];
      }
    }
    auto fsc = [&](const TensorGrid& T2, int which) {
      Grid g(spec);
      for (int j = 0; j < nr; ++j)
        for (int i = 0; i < nt; ++i) {
          auto f = frame_decompose(T2.at(j, i), spec.r(j), spec.theta(i), 0.0);
          double v[6] = {f.LL, f.LLbar, f.LU, f.LbarLbar, f.LbarU, f.UU};
          g.at(j, i) = v[which];
        }
      return g;
    };
    Grid gLL = fsc(snap.gtil, 0), gLU = fsc(snap.gtil, 2), gUU = fsc(snap.gtil, 5);
    Grid gLL_t = fsc(snap.gtil_t, 0);
    Grid gLL_r = dr(gLL);
    Grid g1sum(spec);
    for (int c2 = 0; c2 < 6; ++c2) g1sum += fsc(g1, c2);
    Grid g1sum_r = dr(g1sum), g1sum_th = dtheta(g1sum);
    Grid gTT = gLL + gLU + gUU;
    Grid gTT_th = dtheta(gTT);
    MetricGrids mfull;  // full g_LL needed for the transport coefficient
    Grid cLL = run.stream.cLL.back();
    out.F1 = Grid(spec);
    out.F2 = Grid(spec);
    for (int j = 0; j < nr; ++j) {
      double r = spec.r(j);
      for (int i = 0; i < nt; ++i) {
        out.F1.at(j, i) = gTT.at(j, i) * g1sum_r.at(j, i) +
                          g1sum.at(j, i) * g1sum_th.at(j, i) / r + gTT_th.at(j, i) / r +
                          gTT.at(j, i) / r;
        double ds = 0.5 * (gLL_t.at(j, i) + gLL_r.at(j, i));
        out.F2.at(j, i) = ds + cLL.at(j, i) * gLL_r.at(j, i);
      }
    }
    (void)mfull;
  }
  return out;
}

std::string hextract_to_text(const HExtract& h, int n_theta, int n_modes) {
  std::ostringstream os;
  os.precision(17);
  os << "bprofile v1\nn_s " << h.s_values.size() << " n_modes " << n_modes << "\n";
  std::vector<std::complex<double>> work(n_theta);
  for (size_t m = 0; m < h.s_values.size(); ++m) {
    for (int i = 0; i < n_theta; ++i) work[i] = h.hprime_rows[m][i];
    fft_complex(work, false);
    os << h.s_values[m];
    os << " " << work[0].real() / double(n_theta);
    for (int k = 1; k <= n_modes; ++k) {
      os << " " << 2.0 * work[k].real() / n_theta << " " << -2.0 * work[k].imag() / n_theta;
    }
    os << "\n";
  }
  return os.str();
}

double cone_margin(const std::vector<DiagRow>& rows, double R) {
  double lvl = 0;
  for (const auto& r : rows) lvl = std::max(lvl, r.cone_level);
  return lvl - (R + 0.5);
}

FitResult fit_rows(const std::vector<DiagRow>& rows, double DiagRow::*col, double t_lo,
                   double t_hi) {
  std::vector<double> t, v;
  for (const auto& r : rows) {
    t.push_back(r.t);
    v.push_back(r.*col);
  }
  return fit_decay(t, v, t_lo, t_hi);
}

}  // namespace gwlab
