#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/diagnostics.hpp"

using namespace gwlab;

namespace {
RunConfig small_cfg() {
  RunConfig c;
  c.grid = GridSpec{128, 8, 16.0};
  c.R = 2.0;
  c.width = 0.8;
  c.eps = 0.01;
  c.T_final = 4.0;
  c.out_dt = 0.25;
  c.store_snapshots = true;
  c.store_extract_stream = true;
  return c;
}
}  // namespace

TEST_CASE("weight families: closed forms, monotonicity, sandwich") {
  WeightSpec w{0.85, 0.15, 0.25, WeightFamily::w};
  WeightSpec w1{0.85, 0.15, 0.25, WeightFamily::w1};
  WeightSpec w2{0.85, 0.15, 0.25, WeightFamily::w2};
  w.validate();
  for (double q : {-20.0, -3.0, -0.5, 0.5, 4.0, 30.0}) {
    double aq = 1 + std::abs(q);
    if (q > 0) {
      CHECK(w.value(q) == doctest::Approx(std::pow(aq, 2 + 2 * 0.85)));
      CHECK(w1.value(q) == doctest::Approx(std::pow(aq, 2 + 2 * 0.85 - 2 * 0.15)));
      CHECK(w2.value(q) == doctest::Approx(std::pow(aq, 2 + 2 * 0.85 - 4 * 0.15)));
    } else {
      CHECK(w.value(q) == doctest::Approx(1 + std::pow(aq, -2 * 0.25)));
      CHECK(w1.value(q) == doctest::Approx(std::pow(aq, -2 * 0.15)));
      CHECK(w2.value(q) == doctest::Approx(std::pow(aq, -1 - 2 * 0.15)));
    }
    // monotone increasing
    CHECK(w.deriv(q) > 0.0);
    CHECK(w1.deriv(q) > 0.0);
    CHECK(w2.deriv(q) > 0.0);
    // finite difference agrees with deriv()
    double h = 1e-6;
    CHECK(w.deriv(q) == doctest::Approx((w.value(q + h) - w.value(q - h)) / (2 * h)).epsilon(1e-5));
    // sandwich for the w family with explicit constants:
    //   mu w/(1+|q|)^{1+2mu} <= w' <= (2+2delta) w/(1+|q|)
    CHECK(w.deriv(q) + 1e-18 >= 0.25 * w.value(q) / std::pow(aq, 1 + 2 * 0.25) * (1 - 1e-12));
    CHECK(w.deriv(q) <= (2 + 2 * 0.85) * w.value(q) / aq * (1 + 1e-12));
  }
}

TEST_CASE("weighted energy: zero field, weight bounds, quadrature oracle") {
  GridSpec sp{128, 8, 12.0};
  WeightSpec w{0.85, 0.15, 0.25, WeightFamily::w};
  double t = 20.0;  // the whole grid is interior (q < 0)
  FieldJet zero{Grid(sp), Grid(sp), Grid(sp)};
  CHECK(weighted_energy(zero, {}, w, t) == 0.0);

  // interior-supported field: w in (1, 2] so the energy sits between the
  // plain and doubled unweighted energies
  FieldJet f;
  f.u = sample(sp, [](double r, double) { return std::exp(-r * r); });
  f.ut = sample(sp, [](double r, double) { return 0.3 * std::exp(-r * r); });
  f.utt = Grid(sp);
  double we = weighted_energy(f, {}, w, t);
  WeightSpec unit = w;
  // unweighted via family value 1: compute directly
  Grid d1, d2;
  cartesian_grad(f.u, d1, d2);
  Grid dens(sp);
  for (size_t k = 0; k < dens.v.size(); ++k)
    dens.v[k] = f.ut.v[k] * f.ut.v[k] + d1.v[k] * d1.v[k] + d2.v[k] * d2.v[k];
  double plain = std::sqrt(integrate(dens));
  CHECK(we > plain);
  CHECK(we < std::sqrt(2.0) * plain * 1.0001);

  // quadrature oracle for |I| = 0 on a radial gaussian at finer resolution
  GridSpec spf{512, 8, 12.0};
  FieldJet ff;
  ff.u = sample(spf, [](double r, double) { return std::exp(-r * r); });
  ff.ut = Grid(spf);
  ff.utt = Grid(spf);
  double c1 = weighted_energy(ff, {}, w, t);
  // dense radial quadrature of w(q) |grad u|^2
  double acc = 0;
  const int N = 400000;
  for (int k = 0; k < N; ++k) {
    double r = 12.0 * (k + 0.5) / N;
    double du = -2 * r * std::exp(-r * r);
    acc += w.value(r - t) * du * du * r * (12.0 / N);
  }
  double oracle = std::sqrt(acc * 2 * pi);
  CHECK(c1 == doctest::Approx(oracle).epsilon(1e-4));

  // |I| = 1 and 2 stay finite and scale linearly
  double e1 = weighted_energy(ff, {VectorFieldId::S}, w, t);
  CHECK(std::isfinite(e1));
  FieldJet f2 = ff;
  f2.u *= 2.0;
  f2.ut *= 2.0;
  f2.utt *= 2.0;
  CHECK(weighted_energy(f2, {VectorFieldId::S}, w, t) == doctest::Approx(2 * e1).epsilon(1e-12));
  CHECK(std::isfinite(weighted_energy(ff, {VectorFieldId::Omega12, VectorFieldId::D1}, w, t)));
}

TEST_CASE("delta_h: zero, t=0 consistency with a_from_phi, rotation equivariance") {
  GridSpec sp{192, 16, 12.0};
  Grid z(sp);
  std::vector<double> h0(sp.n_theta, 0.0);
  CHECK(delta_h(z, z, h0) == 0.0);

  // radial data: h = 2 a(theta) from a_from_phi matches the energy integral
  Grid phi0 = sample(sp, [](double r, double th) {
    return 0.01 * std::exp(-r * r) * (1 + 0.2 * std::cos(th));
  });
  Grid phi1 = sample(sp, [](double r, double) { return 0.004 * std::exp(-2 * r * r); });
  ACoeffs a = a_from_phi(phi0, phi1);
  std::vector<double> h(sp.n_theta);
  for (int i = 0; i < sp.n_theta; ++i) h[i] = 2 * a.a(sp.theta(i));
  double d0 = delta_h(phi0, phi1, h);
  // the energy (mode 0) term cancels exactly against a_from_phi (shared
  // quadrature); what remains is the displayed momentum combination
  double E = 4 * pi * a.a0;
  double P1 = pi * a.a1, P2 = pi * a.a2;
  INFO("delta_h(0) = ", d0, " against E = ", E);
  CHECK(d0 == doctest::Approx(4 * std::abs(P1) + 4 * std::abs(P2)).epsilon(1e-9));
  (void)E;

  // exact equivariance under a quarter turn (the displayed form is a sum of
  // component absolute values, invariant under 90-degree rotations)
  int shift = 4;
  Grid p0r(sp), p1r(sp);
  for (int j = 0; j < sp.n_r; ++j)
    for (int i = 0; i < sp.n_theta; ++i) {
      p0r.at(j, (i + shift) % sp.n_theta) = phi0.at(j, i);
      p1r.at(j, (i + shift) % sp.n_theta) = phi1.at(j, i);
    }
  std::vector<double> hr(sp.n_theta);
  for (int i = 0; i < sp.n_theta; ++i) hr[(i + shift) % sp.n_theta] = h[i];
  CHECK(delta_h(p0r, p1r, hr) == doctest::Approx(d0).epsilon(1e-10));
}

TEST_CASE("short constructed run: rows, energy margin, goodness, cone level") {
  RunConfig cfg = small_cfg();
  Grid phi0 = gaussian_data(cfg.grid, cfg.eps, cfg.width, cfg.R);
  Grid z(cfg.grid);
  auto [st, a, b] = Evolver::initial_data(phi0, z, cfg);
  Evolver ev(cfg, Background(CutoffSpec{cfg.R}, a, b));
  ev.set_state(st);
  auto out = ev.run();
  REQUIRE(out.rows.size() > 10);

  // matter energy roughly conserved over the short run
  double e0 = out.rows.front().matter_energy;
  for (const auto& r : out.rows) CHECK(std::abs(r.matter_energy - e0) / e0 < 0.05);

  // energy-inequality ratio finite
  auto m = energy_inequality_margin(out.rows, cfg.eps);
  CHECK(!m.ratio.empty());
  CHECK(std::isfinite(m.max_ratio));

  // cone level: support stays near the initial cone q <= R
  double margin = cone_margin(out.rows, cfg.R);
  INFO("cone margin ", margin);
  CHECK(margin < 2 * cfg.eps * cfg.R + 0.1);

  // wave-condition goodness fields are finite and bounded by the scale of
  // the metric perturbation
  for (const auto& r : out.rows) {
    CHECK(std::isfinite(r.wc_LL));
    CHECK(r.wc_LL < 1.0);
  }

  // delta_h stays at the quadratic level
  for (const auto& r : out.rows) CHECK(r.delta_h < 100 * cfg.eps * cfg.eps);

  // gauge residual does not explode over the short run
  double g1 = out.rows.front().gauge_res_sup;
  double gN = out.rows.back().gauge_res_sup;
  INFO("gauge residual ", g1, " -> ", gN);
  CHECK(gN < 1e-3);
}

TEST_CASE("extract_h: flat frozen metric gives beta = 0 and the flux integral") {
  RunConfig cfg = small_cfg();
  cfg.gauge_mode = GaugeMode::plain_harmonic;
  cfg.freeze_metric = true;
  cfg.dissipation = 0.0;
  cfg.T_final = 3.0;
  Grid phi0 = gaussian_data(cfg.grid, 0.5, 0.8, 2.0);
  Grid z(cfg.grid);
  Evolver ev(cfg, Background(CutoffSpec{cfg.R}, ACoeffs{}, BProfile{}));
  FieldState st = ev.state();
  st.phi = phi0;
  ev.set_state(st);
  auto out = ev.run();
  auto hx = extract_h(out, cfg.grid, CutoffSpec{cfg.R}, cfg.T_final);
  // beta vanishes identically: zero transport source on a flat frozen metric
  for (const auto& bgrid : hx.beta) CHECK(bgrid.max_abs() < 1e-10);
  // hcheck = -2 int Upsilon phi_t phi_r r dr (g^{tt} = -1, det factor r)
  const Snapshot& snap = out.snapshots.back();
  Grid phr = dr(snap.phi);
  CutoffSpec cut{cfg.R};
  const GridSpec& sp = cfg.grid;
  for (int i = 0; i < sp.n_theta; i += 3) {
    double acc = 0;
    for (int j = 0; j < sp.n_r; ++j) {
      double r = sp.r(j);
      acc += cut.upsilon_rt(r, snap.t) * snap.phi_t.at(j, i) * phr.at(j, i) * r;
    }
    acc *= -2.0 * sp.dr();
    CHECK(hx.h_rows.back()[i] == doctest::Approx(acc).epsilon(1e-10));
  }
}

TEST_CASE("extract_h consistency trend on a coupled run") {
  RunConfig cfg = small_cfg();
  cfg.T_final = 6.0;
  Grid phi0 = gaussian_data(cfg.grid, cfg.eps, cfg.width, cfg.R);
  Grid z(cfg.grid);
  auto [st, a, b] = Evolver::initial_data(phi0, z, cfg);
  Evolver ev(cfg, Background(CutoffSpec{cfg.R}, a, b));
  ev.set_state(st);
  auto out = ev.run();
  CHECK_THROWS(extract_h(Evolver::RunResult{}, cfg.grid, CutoffSpec{cfg.R}, 1.0));
  auto hx = extract_h(out, cfg.grid, CutoffSpec{cfg.R}, cfg.T_final);
  REQUIRE(hx.h_rows.size() == out.snapshots.size());
  // hcheck + 2 int dr phi dt phi r dr stays small relative to either term
  // once the pulse is in the wave zone
  for (size_t m = 0; m < hx.s_values.size(); ++m) {
    if (hx.s_values[m] < 2 * 3.0) continue;
    CHECK(hx.consistency[m] < 0.3);
  }
  CHECK(std::isfinite(hx.F1.max_abs()));
  CHECK(std::isfinite(hx.F2.max_abs()));
  // serialization emits a parseable profile table
  std::string txt = hextract_to_text(hx, cfg.grid.n_theta, 3);
  BProfile round = BProfile::from_text(txt);
  CHECK(round.n_modes() == 3);
}

TEST_CASE("fit_rows wraps the decay fit") {
  std::vector<DiagRow> rows;
  for (int k = 0; k <= 50; ++k) {
    DiagRow r;
    r.t = k * 1.0;
    r.sup_phi = 3.0 * std::pow(1 + r.t, -0.5);
    rows.push_back(r);
  }
  auto f = fit_rows(rows, &DiagRow::sup_phi, 5, 50);
  CHECK(f.exponent == doctest::Approx(-0.5).epsilon(1e-10));
}
