#include "gwlab/frame.hpp"

namespace gwlab {

NullCoords to_null_coords(double t, double x1, double x2) {
  double r = std::hypot(x1, x2);
  double th = (r == 0.0) ? 0.0 : std::atan2(x2, x1);
  return {t + r, r - t, th};
}

FrameVectors frame_vectors(double theta) {
  double c = std::cos(theta), s = std::sin(theta);
  FrameVectors f;
  f.L = {1.0, c, s};
  f.Lbar = {1.0, -c, -s};
  f.U = {0.0, -s, c};
  return f;
}

namespace {
double contract(const Sym3& g, const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double s = 0;
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = 0; nu < 3; ++nu) s += g(mu, nu) * a[mu] * b[nu];
  return s;
}
}  // namespace

NullFrameComponents frame_decompose(const Sym3& g, double r, double theta, double dr_min) {
  if (r < dr_min) throw std::invalid_argument("frame_decompose: point too close to the origin");
  FrameVectors f = frame_vectors(theta);
  NullFrameComponents out;
  out.LL = contract(g, f.L, f.L);
  out.LLbar = contract(g, f.L, f.Lbar);
  out.LU = contract(g, f.L, f.U);
  out.LbarLbar = contract(g, f.Lbar, f.Lbar);
  out.LbarU = contract(g, f.Lbar, f.U);
  out.UU = contract(g, f.U, f.U);
  return out;
}

Sym3 frame_reconstruct(const NullFrameComponents& f, double theta) {
  // dual coframe: lam_L = (dt+dr)/2, lam_Lbar = (dt-dr)/2, lam_U = r dth,
  // in (t,x) components with dr = xhat.dx, r dth = thhat.dx
  double c = std::cos(theta), s = std::sin(theta);
  std::array<double, 3> lamL = {0.5, 0.5 * c, 0.5 * s};
  std::array<double, 3> lamB = {0.5, -0.5 * c, -0.5 * s};
  std::array<double, 3> lamU = {0.0, -s, c};
  Sym3 g;
  for (int mu = 0; mu < 3; ++mu)
    for (int nu = mu; nu < 3; ++nu) {
      double v = f.LL * lamL[mu] * lamL[nu] + f.LbarLbar * lamB[mu] * lamB[nu] +
                 f.UU * lamU[mu] * lamU[nu] +
                 f.LLbar * (lamL[mu] * lamB[nu] + lamB[mu] * lamL[nu]) +
                 f.LU * (lamL[mu] * lamU[nu] + lamU[mu] * lamL[nu]) +
                 f.LbarU * (lamB[mu] * lamU[nu] + lamU[mu] * lamB[nu]);
      g(mu, nu) = v;
    }
  return g;
}

bool needs_time_derivative(VectorFieldId z) {
  switch (z) {
    case VectorFieldId::Dt:
    case VectorFieldId::Omega01:
    case VectorFieldId::Omega02:
    case VectorFieldId::S:
      return true;
    default:
      return false;
  }
}

double commutator_constant(VectorFieldId z) { return z == VectorFieldId::S ? 2.0 : 0.0; }

Grid apply_Z(const Grid& u, const Grid* u_t, VectorFieldId z, double t) {
  if (needs_time_derivative(z) && u_t == nullptr)
    throw std::invalid_argument("apply_Z: vector field needs the time-derivative field");
  const GridSpec& sp = u.spec;
  Grid out(sp);
  switch (z) {
    case VectorFieldId::Dt:
      return *u_t;
    case VectorFieldId::D1:
    case VectorFieldId::D2: {
      Grid d1, d2;
      cartesian_grad(u, d1, d2);
      return z == VectorFieldId::D1 ? d1 : d2;
    }
    case VectorFieldId::Omega01:
    case VectorFieldId::Omega02: {
      // Omega_{0i} = t d_i + x_i d_t
      Grid d1, d2;
      cartesian_grad(u, d1, d2);
      const Grid& di = (z == VectorFieldId::Omega01) ? d1 : d2;
      for (int j = 0; j < sp.n_r; ++j) {
        double r = sp.r(j);
        for (int i = 0; i < sp.n_theta; ++i) {
          double th = sp.theta(i);
          double xi = (z == VectorFieldId::Omega01) ? r * std::cos(th) : r * std::sin(th);
          out.at(j, i) = t * di.at(j, i) + xi * u_t->at(j, i);
        }
      }
      return out;
    }
    case VectorFieldId::Omega12:
      // Omega_{12} = -x1 d2 + x2 d1 = -d_theta
      out = dtheta(u);
      out *= -1.0;
      return out;
    case VectorFieldId::S: {
      Grid ur = dr(u);
      for (int j = 0; j < sp.n_r; ++j) {
        double r = sp.r(j);
        for (int i = 0; i < sp.n_theta; ++i)
          out.at(j, i) = t * u_t->at(j, i) + r * ur.at(j, i);
      }
      return out;
    }
  }
  return out;
}

void apply_Z_jet(const FieldJet& f, VectorFieldId z, double t, Grid& zu, Grid& zu_t) {
  const GridSpec& sp = f.u.spec;
  zu = apply_Z(f.u, &f.ut, z, t);
  switch (z) {
    case VectorFieldId::Dt:
      zu_t = f.utt;
      break;
    case VectorFieldId::D1:
    case VectorFieldId::D2: {
      Grid d1, d2;
      cartesian_grad(f.ut, d1, d2);
      zu_t = (z == VectorFieldId::D1) ? d1 : d2;
      break;
    }
    case VectorFieldId::Omega01:
    case VectorFieldId::Omega02: {
      // d_t(t d_i u + x_i u_t) = d_i u + t d_i u_t + x_i u_tt
      Grid d1, d2, e1, e2;
      cartesian_grad(f.u, d1, d2);
      cartesian_grad(f.ut, e1, e2);
      const Grid& di = (z == VectorFieldId::Omega01) ? d1 : d2;
      const Grid& ei = (z == VectorFieldId::Omega01) ? e1 : e2;
      zu_t = Grid(sp);
      for (int j = 0; j < sp.n_r; ++j) {
        double r = sp.r(j);
        for (int i = 0; i < sp.n_theta; ++i) {
          double th = sp.theta(i);
          double xi = (z == VectorFieldId::Omega01) ? r * std::cos(th) : r * std::sin(th);
          zu_t.at(j, i) = di.at(j, i) + t * ei.at(j, i) + xi * f.utt.at(j, i);
        }
      }
      break;
    }
    case VectorFieldId::Omega12:
      zu_t = dtheta(f.ut);
      zu_t *= -1.0;
      break;
    case VectorFieldId::S: {
      // d_t(t u_t + r u_r) = u_t + t u_tt + r (u_t)_r
      Grid utr = dr(f.ut);
      zu_t = Grid(sp);
      for (int j = 0; j < sp.n_r; ++j) {
        double r = sp.r(j);
        for (int i = 0; i < sp.n_theta; ++i)
          zu_t.at(j, i) = f.ut.at(j, i) + t * f.utt.at(j, i) + r * utr.at(j, i);
      }
      break;
    }
  }
}

Grid apply_ZZ(const FieldJet& f, VectorFieldId z1, VectorFieldId z2, double t) {
  Grid zu, zu_t;
  apply_Z_jet(f, z2, t, zu, zu_t);
  return apply_Z(zu, &zu_t, z1, t);
}

TimeField tf_dt(TimeField f, double h_t) {
  return [f, h_t](double t) {
    Grid a = f(t - 2 * h_t), b = f(t - h_t), c = f(t + h_t), d = f(t + 2 * h_t);
    Grid out = a;
    for (size_t k = 0; k < out.v.size(); ++k)
      out.v[k] = (a.v[k] - 8 * b.v[k] + 8 * c.v[k] - d.v[k]) / (12 * h_t);
    return out;
  };
}

TimeField tf_box(TimeField f, double h_t) {
  return [f, h_t](double t) {
    Grid m2 = f(t - 2 * h_t), m1 = f(t - h_t), z = f(t), p1 = f(t + h_t), p2 = f(t + 2 * h_t);
    Grid utt(z.spec);
    for (size_t k = 0; k < utt.v.size(); ++k)
      utt.v[k] = (-m2.v[k] + 16 * m1.v[k] - 30 * z.v[k] + 16 * p1.v[k] - p2.v[k]) /
                 (12 * h_t * h_t);
    Grid lap = laplacian(z);
    lap -= utt;
    return lap;
  };
}

TimeField tf_apply_Z(TimeField f, VectorFieldId z, double h_t) {
  if (needs_time_derivative(z)) {
    TimeField ft = tf_dt(f, h_t);
    return [f, ft, z](double t) {
      Grid u = f(t), ut = ft(t);
      return apply_Z(u, &ut, z, t);
    };
  }
  return [f, z](double t) {
    Grid u = f(t);
    return apply_Z(u, nullptr, z, t);
  };
}

double commutator_defect(TimeField u, VectorFieldId z, double t, const GridSpec& spec,
                         double h_t) {
  TimeField boxu = tf_box(u, h_t);
  TimeField zu = tf_apply_Z(u, z, h_t);
  Grid box_zu = tf_box(zu, h_t)(t);
  Grid z_boxu = tf_apply_Z(boxu, z, h_t)(t);
  double C = commutator_constant(z);
  Grid bu = boxu(t);
  double m = 0;
  for (int j = 0; j < spec.n_r - 6; ++j)
    for (int i = 0; i < spec.n_theta; ++i) {
      double d = box_zu.at(j, i) - z_boxu.at(j, i) - C * bu.at(j, i);
      m = std::max(m, std::abs(d));
    }
  return m;
}

}  // namespace gwlab
