#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/flatwave.hpp"

using namespace gwlab;

namespace {
// gaussian smoothly truncated to vanish identically beyond r = 7
Grid radial_gaussian(const GridSpec& sp, double amp, double w) {
  return sample(sp, [&](double r, double) {
    double x = (r - 5.0) / 2.0;
    double tap = r < 5 ? 1.0 : (r < 7 ? 1.0 - x * x * (3 - 2 * x) : 0.0);
    return amp * std::exp(-r * r / (w * w)) * tap;
  });
}
}  // namespace

TEST_CASE("zero data stays zero; support violation is rejected") {
  GridSpec sp{64, 8, 20.0};
  Grid z(sp);
  auto run = solve_flat_wave(z, z, 5.0);
  CHECK(run.state.phi.max_abs() == 0.0);
  CHECK(run.state.phi_t.max_abs() == 0.0);

  Grid bad = sample(sp, [](double r, double) { return std::exp(-std::pow(r - 18.0, 2)); });
  CHECK_THROWS(solve_flat_wave(bad, z, 5.0));
}

TEST_CASE("fine-grid self-convergence oracle for the origin value") {
  // phi(t=20, r=0) for a radial gaussian: successive refinements converge at
  // order >= 2 (Richardson), pinning the coarse value
  double vals[3];
  int k = 0;
  for (int nr : {128, 256, 512}) {
    GridSpec sp{nr, 8, 28.0};
    Grid phi0 = radial_gaussian(sp, 1.0, 1.0);
    Grid z(sp);
    auto run = solve_flat_wave(phi0, z, 20.0);
    vals[k++] = origin_value(run.state.phi);
  }
  double d1 = std::abs(vals[1] - vals[0]);
  double d2 = std::abs(vals[2] - vals[1]);
  INFO("values ", vals[0], " ", vals[1], " ", vals[2]);
  CHECK(d1 / d2 > 3.0);
  CHECK(d2 < 2e-4);
}

TEST_CASE("semigroup property to round-off accumulation") {
  GridSpec sp{96, 8, 16.0};
  Grid phi0 = radial_gaussian(sp, 0.5, 1.0);
  Grid z(sp);
  auto a = solve_flat_wave(phi0, z, 8.0);
  auto b1 = solve_flat_wave(phi0, z, 4.0);
  auto b2 = solve_flat_wave(b1.state.phi, b1.state.phi_t, 4.0);
  Grid diff = a.state.phi - b2.state.phi;
  CHECK(diff.max_abs() < 5e-10);
}

TEST_CASE("flat energy conservation over a long horizon") {
  GridSpec sp{512, 8, 110.0};
  Grid phi0 = radial_gaussian(sp, 1.0, 2.5);
  Grid z(sp);
  FlatWaveOptions opt;
  opt.record_every = 200;
  auto run = solve_flat_wave(phi0, z, 100.0, opt);
  double e0 = run.records.front().energy;
  double drift = 0;
  for (const auto& r : run.records) drift = std::max(drift, std::abs(r.energy - e0) / e0);
  CHECK(drift < 1e-4);
}

TEST_CASE("self-convergence of the scheme at order >= 2") {
  double vals[3];
  int k = 0;
  for (int nr : {64, 128, 256}) {
    GridSpec sp{nr, 8, 12.0};
    Grid phi0 = radial_gaussian(sp, 1.0, 1.0);
    Grid z(sp);
    auto run = solve_flat_wave(phi0, z, 2.5);
    vals[k++] = origin_value(run.state.phi);
  }
  double order = std::log2(std::abs(vals[1] - vals[0]) / std::abs(vals[2] - vals[1]));
  INFO("origin values ", vals[0], " ", vals[1], " ", vals[2]);
  CHECK(order > 1.9);
}

TEST_CASE("decay constant M") {
  GridSpec sp{128, 8, 12.0};
  Grid z(sp);
  CHECK(decay_constant_M(z, z, 1.0).M_value == 0.0);
  // smoothed bump of height 1 at the origin: M >= 1
  Grid bump = sample(sp, [](double r, double) { return r < 1 ? std::pow(1 - r * r, 3) : 0.0; });
  CHECK(decay_constant_M(bump, z, 1.0).M_value >= 1.0);
  CHECK_THROWS(decay_constant_M(bump, z, 0.4));  // mu <= 1/2 rejected
  // refinement changes M by < 1%
  GridSpec sp2{256, 8, 12.0};
  Grid g1 = radial_gaussian(sp, 1.0, 1.0), g2 = radial_gaussian(sp2, 1.0, 1.0);
  double m1 = decay_constant_M(g1, Grid(sp), 2.0).M_value;
  double m2 = decay_constant_M(g2, Grid(sp2), 2.0).M_value;
  CHECK(std::abs(m1 - m2) / m2 < 0.01);
}

TEST_CASE("flat decay margins: bounded across horizons, amplitude invariant") {
  GridSpec sp{256, 8, 112.0};
  Grid phi0 = radial_gaussian(sp, 1.0, 1.0);
  Grid z(sp);
  CHECK(verify_flat_decay(z, z, 10.0, 2.0, 50) == 0.0);
  double m50 = verify_flat_decay(phi0, z, 50.0, 2.0, 100);
  double m100 = verify_flat_decay(phi0, z, 100.0, 2.0, 100);
  INFO("margins ", m50, " ", m100);
  CHECK(m100 / m50 > 0.5);
  CHECK(m100 / m50 < 2.0);
  // amplitude scaling leaves the margin unchanged
  Grid phi0b = 3.0 * phi0;
  double mb = verify_flat_decay(phi0b, z, 50.0, 2.0, 100);
  CHECK(mb == doctest::Approx(m50).epsilon(1e-12));
}

TEST_CASE("flat decay exponent at the origin is -1") {
  // velocity data with nonzero mean saturates the r=0 rate of the flat bound
  GridSpec sp{384, 8, 112.0};
  Grid phi1 = radial_gaussian(sp, 1.0, 1.0);
  Grid z(sp);
  FlatWaveOptions opt;
  opt.record_every = 100;
  auto run = solve_flat_wave(z, phi1, 100.0, opt);
  std::vector<double> t, v;
  for (const auto& r : run.records) {
    if (r.t < 10 || r.t > 100) continue;
    t.push_back(r.t);
    v.push_back(std::abs(r.origin_phi));
  }
  auto fit = fit_decay(t, v, 10, 100);
  INFO("exponent ", fit.exponent);
  CHECK(fit.exponent == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("Klainerman-Sobolev margin: zero, light-cone bump, invariances") {
  WeightSpec v{0.85, 0.15, 0.25, WeightFamily::w};
  double t = 20.0;
  auto make_jet = [&](const GridSpec& sp, double amp) {
    // f = amp exp(-(r-t)^2) g(theta), analytic time derivatives
    FieldJet f;
    f.u = sample(sp, [&](double r, double th) {
      return amp * std::exp(-std::pow(r - t, 2)) * (1 + 0.3 * std::cos(th));
    });
    f.ut = sample(sp, [&](double r, double th) {
      return amp * 2 * (r - t) * std::exp(-std::pow(r - t, 2)) * (1 + 0.3 * std::cos(th));
    });
    f.utt = sample(sp, [&](double r, double th) {
      double q = r - t;
      return amp * (4 * q * q - 2) * std::exp(-q * q) * (1 + 0.3 * std::cos(th));
    });
    return f;
  };
  GridSpec sp{256, 16, 40.0};
  FieldJet zero{Grid(sp), Grid(sp), Grid(sp)};
  CHECK(klainerman_sobolev_margin(zero, v, t) == 0.0);

  FieldJet f = make_jet(sp, 1.0);
  double m1 = klainerman_sobolev_margin(f, v, t);
  CHECK(m1 > 0.0);
  CHECK(std::isfinite(m1));
  // amplitude invariance
  FieldJet f2 = make_jet(sp, 2.5);
  double m2 = klainerman_sobolev_margin(f2, v, t);
  CHECK(m2 == doctest::Approx(m1).epsilon(1e-12));
  // refinement stability < 5%
  GridSpec spf{512, 16, 40.0};
  double mf = klainerman_sobolev_margin(make_jet(spf, 1.0), v, t);
  CHECK(std::abs(mf - m1) / mf < 0.05);
}

TEST_CASE("Hardy margin: degenerate input rejected, stable, homogeneous") {
  GridSpec sp{256, 8, 40.0};
  Grid cst(sp, 1.0);
  CHECK_THROWS(hardy_margin(cst, -0.5, 2.0, 10.0));
  CHECK_THROWS(hardy_margin(cst, 1.5, 2.0, 10.0));  // alpha >= 1 out of scope

  double t = 10.0;
  Grid f = sample(sp, [&](double r, double) { return std::exp(-std::pow(r - t, 2)); });
  double m1 = hardy_margin(f, -0.5, 2.0, t);
  CHECK(std::isfinite(m1));
  CHECK(m1 > 0.0);
  Grid f2 = 2.0 * f;
  CHECK(hardy_margin(f2, -0.5, 2.0, t) == doctest::Approx(m1).epsilon(1e-13));
  GridSpec spf{512, 8, 40.0};
  Grid ff = sample(spf, [&](double r, double) { return std::exp(-std::pow(r - t, 2)); });
  double mf = hardy_margin(ff, -0.5, 2.0, t);
  CHECK(std::abs(mf - m1) / mf < 0.05);
}

TEST_CASE("Linf-Linf inhomogeneous bound: zero source, two horizons, linearity") {
  GridSpec sp{192, 8, 112.0};
  SpaceTimeSource zero = [](double, double, double) { return 0.0; };
  CHECK(inhom_bound_check(zero, 2.5, 2.0, 5.0, sp, 10) == 0.0);

  SpaceTimeSource F = [](double t, double r, double) {
    double s = t + r, q = r - t;
    return std::pow(1 + s, -2.0) * std::pow(1 + std::abs(q), -2.0);
  };
  double m50 = inhom_bound_check(F, 2.5, 2.0, 50.0, sp, 40);
  double m100 = inhom_bound_check(F, 2.5, 2.0, 100.0, sp, 40);
  INFO("margins ", m50, " ", m100);
  CHECK(m100 / m50 > 0.5);
  CHECK(m100 / m50 < 2.0);
  // linear scaling leaves the margin unchanged
  SpaceTimeSource F2 = [&](double t, double r, double th) { return 2.0 * F(t, r, th); };
  double m2 = inhom_bound_check(F2, 2.5, 2.0, 50.0, sp, 40);
  CHECK(m2 == doctest::Approx(m50).epsilon(1e-10));
  CHECK_THROWS(inhom_bound_check(F, 1.2, 2.0, 5.0, sp, 10));  // exponent range
}
