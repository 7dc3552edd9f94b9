#pragma once

#include "gwlab/core.hpp"

namespace gwlab {

// s = t + r, q = r - t, theta = atan2(x2, x1) (0 at the origin)
struct NullCoords {
  double s, q, theta;
};
NullCoords to_null_coords(double t, double x1, double x2);

// null frame at (r, theta):  L = dt+dr, Lbar = dt-dr, U = dth/r, all in
// (t, x1, x2) components
struct FrameVectors {
  std::array<double, 3> L, Lbar, U;
};
FrameVectors frame_vectors(double theta);

// metric contracted against the frame (order matches the spec)
struct NullFrameComponents {
  double LL, LLbar, LU, LbarLbar, LbarU, UU;
};

// requires r >= one grid spacing (pass dr_min; throws below it)
NullFrameComponents frame_decompose(const Sym3& g, double r, double theta, double dr_min);
// inverse map (the frame is a basis for r > 0)
Sym3 frame_reconstruct(const NullFrameComponents& f, double theta);

enum class VectorFieldId { Dt, D1, D2, Omega01, Omega02, Omega12, S };
constexpr std::array<VectorFieldId, 7> all_vector_fields = {
    VectorFieldId::Dt,      VectorFieldId::D1,      VectorFieldId::D2,
    VectorFieldId::Omega01, VectorFieldId::Omega02, VectorFieldId::Omega12,
    VectorFieldId::S};

bool needs_time_derivative(VectorFieldId z);
double commutator_constant(VectorFieldId z);  // C(S)=2, else 0

// Z applied to a grid scalar at time t. u_t must be supplied for Z that
// involve d/dt (throws otherwise).
Grid apply_Z(const Grid& u, const Grid* u_t, VectorFieldId z, double t);

// Field with first and second time derivatives stored; enough to form Zu
// together with (Zu)_t, hence any Z^I u with |I| <= 2.
struct FieldJet {
  Grid u, ut, utt;
};
// returns (Zu, (Zu)_t)
void apply_Z_jet(const FieldJet& f, VectorFieldId z, double t, Grid& zu, Grid& zu_t);
Grid apply_ZZ(const FieldJet& f, VectorFieldId z1, VectorFieldId z2, double t);

// ---------------------------------------------------------------------------
// A field known as a function of time (analytic test functions, snapshot
// interpolants). Time derivatives are taken by 5-point finite differences
// with step h_t; everything else uses the grid operators.
// ---------------------------------------------------------------------------
using TimeField = std::function<Grid(double)>;

TimeField tf_dt(TimeField f, double h_t);
TimeField tf_box(TimeField f, double h_t);  // -u_tt + laplacian(u)
TimeField tf_apply_Z(TimeField f, VectorFieldId z, double h_t);

// max over interior grid points (a few rings in from the outer edge) of
// | box(Zu) - Z(box u) - C(Z) box u | at time t
double commutator_defect(TimeField u, VectorFieldId z, double t, const GridSpec& spec,
                         double h_t);

}  // namespace gwlab
