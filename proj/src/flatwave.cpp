#include "gwlab/flatwave.hpp"

#include <fstream>

namespace gwlab {

double flat_dt(const GridSpec& spec, double cfl) {
  double inner = spec.r(0) * spec.dtheta();
  return cfl * std::min(spec.dr(), inner);
}

double flat_energy(const Grid& phi, const Grid& phi_t) {
  Grid pr = dr(phi), pth = dtheta(phi);
  Grid dens(phi.spec);
  for (int j = 0; j < phi.spec.n_r; ++j) {
    double r = phi.spec.r(j);
    for (int i = 0; i < phi.spec.n_theta; ++i) {
      double a = phi_t.at(j, i), b = pr.at(j, i), c = pth.at(j, i) / r;
      dens.at(j, i) = a * a + b * b + c * c;
    }
  }
  return integrate(dens);
}

namespace {

FlatStepRecord make_record(const FlatWaveState& st) {
  FlatStepRecord r;
  r.t = st.t;
  r.energy = flat_energy(st.phi, st.phi_t);
  r.sup_phi = st.phi.max_abs();
  r.origin_phi = origin_value(st.phi);
  return r;
}

void flat_rhs(const FlatWaveState& st, const FlatWaveOptions& opt, Grid& dphi, Grid& dphi_t) {
  dphi = st.phi_t;
  dphi_t = laplacian(st.phi);
  if (opt.source) {
    const GridSpec& sp = st.phi.spec;
    for (int j = 0; j < sp.n_r; ++j)
      for (int i = 0; i < sp.n_theta; ++i)
        dphi_t.at(j, i) += (*opt.source)(st.t, sp.r(j), sp.theta(i));
  }
}

}  // namespace

FlatWaveRun solve_flat_wave(const Grid& phi0, const Grid& phi1, double T,
                            const FlatWaveOptions& opt) {
  const GridSpec& sp = phi0.spec;
  // domain-of-dependence check: data must not touch the band the outer
  // boundary can influence within [0, T]
  double floor = 1e-12 * std::max(phi0.max_abs(), phi1.max_abs());
  for (int j = 0; j < sp.n_r; ++j) {
    if (sp.r(j) <= sp.r_max - T) continue;
    for (int i = 0; i < sp.n_theta; ++i)
      if (std::abs(phi0.at(j, i)) > floor || std::abs(phi1.at(j, i)) > floor)
        throw std::invalid_argument("solve_flat_wave: data support violates r < r_max - T");
  }

  FlatWaveRun run;
  run.state = {phi0, phi1, 0.0};
  double dt = flat_dt(sp, opt.cfl);
  int n_steps = int(std::ceil(T / dt - 1e-12));
  dt = T / n_steps;

  auto record = [&](const FlatWaveState& st) {
    run.records.push_back(make_record(st));
    if (opt.on_record) opt.on_record(st);
  };
  record(run.state);

  Grid k1p, k1v, k2p, k2v, k3p, k3v, k4p, k4v;
  FlatWaveState tmp;
  for (int n = 0; n < n_steps; ++n) {
    FlatWaveState& st = run.state;
    flat_rhs(st, opt, k1p, k1v);
    tmp = st;
    tmp.t = st.t + dt / 2;
    tmp.phi.axpy(dt / 2, k1p);
    tmp.phi_t.axpy(dt / 2, k1v);
    flat_rhs(tmp, opt, k2p, k2v);
    tmp = st;
    tmp.t = st.t + dt / 2;
    tmp.phi.axpy(dt / 2, k2p);
    tmp.phi_t.axpy(dt / 2, k2v);
    flat_rhs(tmp, opt, k3p, k3v);
    tmp = st;
    tmp.t = st.t + dt;
    tmp.phi.axpy(dt, k3p);
    tmp.phi_t.axpy(dt, k3v);
    flat_rhs(tmp, opt, k4p, k4v);
    st.phi.axpy(dt / 6, k1p);
    st.phi.axpy(dt / 3, k2p);
    st.phi.axpy(dt / 3, k3p);
    st.phi.axpy(dt / 6, k4p);
    st.phi_t.axpy(dt / 6, k1v);
    st.phi_t.axpy(dt / 3, k2v);
    st.phi_t.axpy(dt / 3, k3v);
    st.phi_t.axpy(dt / 6, k4v);
    if (opt.dissipation > 0) {
      Grid dp = dissipation(st.phi), dv = dissipation(st.phi_t);
      st.phi.axpy(opt.dissipation, dp);
      st.phi_t.axpy(opt.dissipation, dv);
    }
    st.t += dt;
    bool last = (n == n_steps - 1);
    if (last || (opt.record_every > 0 && (n + 1) % opt.record_every == 0)) record(st);
  }
  return run;
}

void write_flat_records(const std::vector<FlatStepRecord>& recs, const std::string& path) {
  std::ofstream f(path);
  f << "t,energy,sup_phi,origin_phi\n";
  f.precision(17);
  for (const auto& r : recs)
    f << r.t << "," << r.energy << "," << r.sup_phi << "," << r.origin_phi << "\n";
}

DecayWitness decay_constant_M(const Grid& phi0, const Grid& phi1, double mu) {
  if (!(mu > 0.5)) throw std::invalid_argument("decay_constant_M: mu must exceed 1/2");
  const GridSpec& sp = phi0.spec;
  Grid g1, g2;
  cartesian_grad(phi0, g1, g2);
  DecayWitness w;
  w.mu = mu;
  for (int j = 0; j < sp.n_r; ++j) {
    double r = sp.r(j);
    for (int i = 0; i < sp.n_theta; ++i) {
      double grad = std::hypot(g1.at(j, i), g2.at(j, i));
      double m = std::pow(1 + r, mu) * std::abs(phi0.at(j, i)) +
                 std::pow(1 + r, mu + 1) * (std::abs(phi1.at(j, i)) + grad);
      w.M_value = std::max(w.M_value, m);
    }
  }
  return w;
}

double verify_flat_decay(const Grid& phi0, const Grid& phi1, double T, double mu,
                         int sample_every, DecayWitness* witness_out) {
  DecayWitness w = decay_constant_M(phi0, phi1, mu);
  if (w.M_value == 0) {
    if (witness_out) *witness_out = w;
    return 0.0;
  }
  double margin = 0;
  FlatWaveOptions opt;
  opt.record_every = sample_every;
  Grid margin_field(phi0.spec);
  opt.on_record = [&](const FlatWaveState& st) {
    const GridSpec& sp = st.phi.spec;
    for (int j = 0; j < sp.n_r; ++j) {
      double r = sp.r(j);
      double q = r - st.t;
      double bound = bracket_plus(1 + std::abs(q), 1 - mu) /
                     (std::sqrt(1 + st.t + r) * std::sqrt(1 + std::abs(q))) * w.M_value;
      for (int i = 0; i < sp.n_theta; ++i) {
        double m = std::abs(st.phi.at(j, i)) / bound;
        margin = std::max(margin, m);
        margin_field.at(j, i) = m;
      }
    }
  };
  solve_flat_wave(phi0, phi1, T, opt);
  w.margin_field = margin_field;
  if (witness_out) *witness_out = w;
  return margin;
}

double klainerman_sobolev_margin(const FieldJet& f, const WeightSpec& v, double t) {
  const GridSpec& sp = f.u.spec;
  auto weighted_l2 = [&](const Grid& g) {
    Grid dens(sp);
    for (int j = 0; j < sp.n_r; ++j) {
      double q = sp.r(j) - t;
      double wv = v.value(q);
      for (int i = 0; i < sp.n_theta; ++i) dens.at(j, i) = wv * g.at(j, i) * g.at(j, i);
    }
    return std::sqrt(std::max(0.0, integrate(dens)));
  };
  double denom = weighted_l2(f.u);
  for (auto z : all_vector_fields) {
    Grid zu, zu_t;
    apply_Z_jet(f, z, t, zu, zu_t);
    denom += weighted_l2(zu);
    FieldJet zjet{zu, zu_t, Grid(sp)};  // utt unused by value-only second application
    for (auto z2 : all_vector_fields) denom += weighted_l2(apply_Z(zu, &zu_t, z2, t));
    (void)zjet;
  }
  if (denom == 0) return 0.0;
  double num = 0;
  for (int j = 0; j < sp.n_r; ++j) {
    double r = sp.r(j), q = r - t;
    double fac = std::sqrt(v.value(q)) * std::sqrt(1 + t + r) * std::sqrt(1 + std::abs(q));
    for (int i = 0; i < sp.n_theta; ++i)
      num = std::max(num, std::abs(f.u.at(j, i)) * fac);
  }
  return num / denom;
}

double hardy_margin(const Grid& f, double alpha, double beta, double t) {
  if (!(alpha < 1.0) || !(beta > 1.0))
    throw std::invalid_argument("hardy_margin: need alpha < 1 and beta > 1");
  const GridSpec& sp = f.spec;
  HardyWeight v{alpha, beta};
  Grid fr = dr(f);
  Grid num_d(sp), den_d(sp);
  for (int j = 0; j < sp.n_r; ++j) {
    double q = sp.r(j) - t;
    double w = v.value(q);
    for (int i = 0; i < sp.n_theta; ++i) {
      double a = f.at(j, i) / (1 + std::abs(q));
      num_d.at(j, i) = w * a * a;
      den_d.at(j, i) = w * fr.at(j, i) * fr.at(j, i);
    }
  }
  double den = std::sqrt(std::max(0.0, integrate(den_d)));
  double num = std::sqrt(std::max(0.0, integrate(num_d)));
  if (den <= 1e-10 * num)
    throw std::invalid_argument("hardy_margin: d_r f vanishes identically (f must decay)");
  return num / den;
}

double inhom_bound_check(const SpaceTimeSource& F, double mu, double nu, double T,
                         const GridSpec& spec, int sample_every, InhomWitness* witness_out) {
  if (!(mu > 1.5) || !(nu > 1.0))
    throw std::invalid_argument("inhom_bound_check: need mu > 3/2 and nu > 1");
  InhomWitness w{mu, nu, 0.0};
  double margin = 0;
  FlatWaveOptions opt;
  opt.source = F;
  opt.record_every = sample_every;
  opt.on_record = [&](const FlatWaveState& st) {
    const GridSpec& sp = st.phi.spec;
    for (int j = 0; j < sp.n_r; ++j) {
      double r = sp.r(j), q = r - st.t, aq = 1 + std::abs(q);
      double srcw = std::pow(1 + r + st.t, mu) * std::pow(aq, nu);
      double solw = std::sqrt(1 + st.t + r) * std::sqrt(aq) / bracket_plus(aq, 2 - mu);
      for (int i = 0; i < sp.n_theta; ++i) {
        w.M_munu = std::max(w.M_munu, srcw * std::abs(F(st.t, r, sp.theta(i))));
        margin = std::max(margin, solw * std::abs(st.phi.at(j, i)));
      }
    }
  };
  Grid zero(spec);
  solve_flat_wave(zero, zero, T, opt);
  if (witness_out) *witness_out = w;
  if (w.M_munu == 0) return 0.0;
  return margin / w.M_munu;
}

}  // namespace gwlab
