#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/frame.hpp"

#include <random>

using namespace gwlab;

TEST_CASE("null coordinates") {
  auto c1 = to_null_coords(0, 1, 0);
  CHECK(c1.s == doctest::Approx(1.0));
  CHECK(c1.q == doctest::Approx(1.0));
  CHECK(c1.theta == doctest::Approx(0.0));
  auto c2 = to_null_coords(2, 0, 3);
  CHECK(c2.s == doctest::Approx(5.0));
  CHECK(c2.q == doctest::Approx(1.0));
  CHECK(c2.theta == doctest::Approx(pi / 2));
  auto c3 = to_null_coords(1, 0, 0);
  CHECK(c3.s == doctest::Approx(1.0));
  CHECK(c3.q == doctest::Approx(-1.0));
  CHECK(c3.theta == doctest::Approx(0.0));
  // s + q = 2r and s - q = 2t exactly
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 50; ++k) {
    double t = u(rng), x = u(rng), y = u(rng);
    auto c = to_null_coords(t, x, y);
    CHECK(c.s + c.q == doctest::Approx(2 * std::hypot(x, y)).epsilon(1e-14));
    CHECK(c.s - c.q == doctest::Approx(2 * t).epsilon(1e-14));
  }
}

TEST_CASE("frame decomposition of Minkowski and perturbations") {
  Sym3 m = Sym3::minkowski();
  auto f = frame_decompose(m, 2.0, 0.7, 0.1);
  CHECK(f.LL == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.LLbar == doctest::Approx(-2.0));
  CHECK(f.LU == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.LbarLbar == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.LbarU == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.UU == doctest::Approx(1.0));

  // m + eps dq^2 with dq = dr - dt: g_LbarLbar = 4 eps, rest unchanged
  double th = 1.3, eps = 0.01;
  double dq[3] = {-1.0, std::cos(th), std::sin(th)};
  Sym3 g = m;
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = mu; nu < 3; ++nu) g(mu, nu) += eps * dq[mu] * dq[nu];
  auto fd = frame_decompose(g, 3.0, th, 0.1);
  CHECK(fd.LbarLbar == doctest::Approx(4 * eps).epsilon(1e-12));
  CHECK(fd.LL == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fd.LLbar == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(fd.LU == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fd.UU == doctest::Approx(1.0).epsilon(1e-12));

  // bilinearity: doubling the metric doubles every component
  Sym3 g2 = 2.0 * m;
  auto f2 = frame_decompose(g2, 1.0, 0.2, 0.1);
  CHECK(f2.LLbar == doctest::Approx(-4.0));
  CHECK(f2.UU == doctest::Approx(2.0));

  CHECK_THROWS(frame_decompose(m, 0.01, 0.0, 0.1));
}

TEST_CASE("frame decompose and reconstruct round-trip") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int k = 0; k < 20; ++k) {
    Sym3 g = Sym3::minkowski();
    for (int c = 0; c < 6; ++c) g.a[c] += u(rng);
    double th = u(rng) * 10;
    auto f = frame_decompose(g, 1.5, th, 0.1);
    Sym3 back = frame_reconstruct(f, th);
    for (int c = 0; c < 6; ++c) CHECK(back.a[c] == doctest::Approx(g.a[c]).epsilon(1e-12));
  }
}

TEST_CASE("apply_Z on known fields") {
  GridSpec sp{64, 16, 4.0};
  double t = 1.7;
  // S applied to t*r -> 2 t r
  Grid u = sample(sp, [&](double r, double) { return t * r; });
  Grid ut = sample(sp, [&](double r, double) { return r; });  // d_t(t r) = r
  Grid su = apply_Z(u, &ut, VectorFieldId::S, t);
  double err = 0;
  for (int j = 2; j < sp.n_r - 4; ++j)
    for (int i = 0; i < sp.n_theta; ++i)
      err = std::max(err, std::abs(su.at(j, i) - 2 * t * sp.r(j)));
  CHECK(err < 1e-10);

  // Omega12 kills radial functions
  Grid v = sample(sp, [](double r, double) { return std::exp(-r * r); });
  Grid ov = apply_Z(v, nullptr, VectorFieldId::Omega12, t);
  CHECK(ov.max_abs() < 1e-12);

  // Omega01 applied to x1 equals t
  Grid w = sample(sp, [](double r, double th) { return r * std::cos(th); });
  Grid wt(sp);
  Grid ow = apply_Z(w, &wt, VectorFieldId::Omega01, t);
  err = 0;
  for (int j = 2; j < sp.n_r - 4; ++j)
    for (int i = 0; i < sp.n_theta; ++i) err = std::max(err, std::abs(ow.at(j, i) - t));
  CHECK(err < 1e-10);

  // missing time derivative rejected
  CHECK_THROWS(apply_Z(w, nullptr, VectorFieldId::S, t));

  // linearity to round-off
  Grid a = sample(sp, [](double r, double th) { return std::exp(-r * r) * std::cos(2 * th); });
  Grid b = sample(sp, [](double r, double th) { return std::exp(-0.5 * r * r) * std::sin(th); });
  Grid combo = 2.0 * a + (-3.0) * b;
  Grid za = apply_Z(a, nullptr, VectorFieldId::D1, t);
  Grid zb = apply_Z(b, nullptr, VectorFieldId::D1, t);
  Grid zc = apply_Z(combo, nullptr, VectorFieldId::D1, t);
  Grid diff = zc - (2.0 * za + (-3.0) * zb);
  CHECK(diff.max_abs() < 1e-12 * std::max(1.0, zc.max_abs()));
}

namespace {
// smooth localized space-time test function, analytic in t
TimeField bump_field(const GridSpec& sp) {
  return [sp](double t) {
    return sample(sp, [t](double r, double th) {
      double x = r * std::cos(th) - 0.2 * t, y = r * std::sin(th) + 0.1;
      double w = 1.0 + 0.1 * t;
      return std::exp(-(x * x + y * y) / (w)) * (1 + 0.3 * std::sin(0.5 * t));
    });
  };
}
}  // namespace

TEST_CASE("commutator defects vanish at discretization order, C(S)=2") {
  double t = 1.0;
  std::vector<double> defS;
  for (int nr : {48, 96}) {
    GridSpec sp{nr, 16, 6.0};
    double h_t = 0.5 * sp.dr();
    TimeField u = bump_field(sp);
    for (auto z : all_vector_fields) {
      double d = commutator_defect(u, z, t, sp, h_t);
      CHECK(d < 1.0);  // sanity
      if (z == VectorFieldId::S) defS.push_back(d);
    }
  }
  // S-defect converges at order >= 2
  CHECK(defS[0] / defS[1] > 3.5);

  // with the wrong constant the S defect does not converge to zero
  GridSpec sp{96, 16, 6.0};
  TimeField u = bump_field(sp);
  double h_t = 0.5 * sp.dr();
  TimeField boxu = tf_box(u, h_t);
  TimeField zu = tf_apply_Z(u, VectorFieldId::S, h_t);
  Grid box_zu = tf_box(zu, h_t)(t);
  Grid z_boxu = tf_apply_Z(boxu, VectorFieldId::S, h_t)(t);
  Grid bu = boxu(t);
  double with2 = 0, with0 = 0;
  for (int j = 0; j < sp.n_r - 6; ++j)
    for (int i = 0; i < sp.n_theta; ++i) {
      with2 = std::max(with2, std::abs(box_zu.at(j, i) - z_boxu.at(j, i) - 2 * bu.at(j, i)));
      with0 = std::max(with0, std::abs(box_zu.at(j, i) - z_boxu.at(j, i)));
    }
  CHECK(with2 * 20 < with0);
}

TEST_CASE("all seven commutator defects converge at order >= 2") {
  double t = 1.0;
  for (auto z : all_vector_fields) {
    double d1 = 0, d2 = 0;
    {
      GridSpec sp{40, 16, 6.0};
      d1 = commutator_defect(bump_field(sp), z, t, sp, 0.5 * sp.dr());
    }
    {
      GridSpec sp{80, 16, 6.0};
      d2 = commutator_defect(bump_field(sp), z, t, sp, 0.25 * 6.0 / 40.0);
    }
    INFO("field ", int(z), " defects ", d1, " ", d2);
    // defects already at round-off level count as converged
    CHECK((d2 < 1e-9 || d1 / d2 > 3.0));
  }
}
