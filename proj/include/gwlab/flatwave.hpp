#pragma once

#include "gwlab/core.hpp"
#include "gwlab/frame.hpp"
#include "gwlab/weights.hpp"

#include <optional>

namespace gwlab {

// flat 2+1 wave solver (method of lines, classical RK4) used as the
// reference oracle for the curved solver and as the testbed for the decay /
// Sobolev / Hardy / Linf-Linf checkers
struct FlatWaveState {
  Grid phi, phi_t;
  double t = 0;
};

struct FlatStepRecord {
  double t = 0;
  double energy = 0;      // int (phi_t^2 + |grad phi|^2) r dr dth
  double sup_phi = 0;
  double origin_phi = 0;  // theta-mean extrapolated to r = 0
};

using SpaceTimeSource = std::function<double(double t, double r, double theta)>;

struct FlatWaveOptions {
  double cfl = 0.25;
  double dissipation = 0.0;
  std::optional<SpaceTimeSource> source;
  int record_every = 0;  // 0: record only t=0 and T
  std::function<void(const FlatWaveState&)> on_record;
};

struct FlatWaveRun {
  FlatWaveState state;
  std::vector<FlatStepRecord> records;
};

double flat_dt(const GridSpec& spec, double cfl);
double flat_energy(const Grid& phi, const Grid& phi_t);

// throws if the initial data violate the domain-of-dependence margin
// r_support < r_max - T (checked against a 1e-12 relative floor)
FlatWaveRun solve_flat_wave(const Grid& phi0, const Grid& phi1, double T,
                            const FlatWaveOptions& opt = {});

// write records as comma-separated rows: t,energy,sup_phi,origin_phi
void write_flat_records(const std::vector<FlatStepRecord>& recs, const std::string& path);

// ---------------------------------------------------------------------------
// decay witnesses and margins
// ---------------------------------------------------------------------------
struct DecayWitness {
  double mu = 0;
  double M_value = 0;
  Grid margin_field;  // |phi| over the claimed bound, on the final slice
};

// M_mu = sup (1+r)^mu |phi0| + (1+r)^{mu+1} (|phi1| + |grad phi0|); mu > 1/2
DecayWitness decay_constant_M(const Grid& phi0, const Grid& phi1, double mu);

// max over the recorded slices of |phi| sqrt(1+t+r) sqrt(1+|q|)
//   / ((1+|q|)^{[1-mu]_+} M)
double verify_flat_decay(const Grid& phi0, const Grid& phi1, double T, double mu,
                         int sample_every, DecayWitness* witness_out = nullptr);

// Klainerman-Sobolev: max |f| v^{1/2}(q) sqrt(1+s) sqrt(1+|q|) over the grid
// divided by sum_{|I|<=2} ||v^{1/2} Z^I f||_L2
double klainerman_sobolev_margin(const FieldJet& f, const WeightSpec& v, double t);

// || v^{1/2} (1+|q|)^{-1} f ||_L2 / || v^{1/2} d_r f ||_L2 with the Hardy
// weight; throws if d_r f vanishes identically
double hardy_margin(const Grid& f, double alpha, double beta, double t);

// Linf-Linf: solve box u = F with zero data up to T, then
// max |u| (1+t+r)^{1/2} (1+|q|)^{1/2 - [2-mu]_+-part} / M_{mu,nu}(F)
struct InhomWitness {
  double mu = 0, nu = 0;
  double M_munu = 0;
};
double inhom_bound_check(const SpaceTimeSource& F, double mu, double nu, double T,
                         const GridSpec& spec, int sample_every,
                         InhomWitness* witness_out = nullptr);

}  // namespace gwlab
