#pragma once

#include "gwlab/background.hpp"
#include "gwlab/core.hpp"
#include "gwlab/flatwave.hpp"
#include "gwlab/gauge.hpp"
#include "gwlab/weights.hpp"

#include <optional>

namespace gwlab {

enum class GaugeMode { constructed, plain_harmonic };

struct RunConfig {
  double eps = 0.01;     // data amplitude
  double R = 2.0;        // support radius
  double width = 0.8;    // Gaussian width of the default data
  double delta = 0.85, sigma = 0.15, mu = 0.25, rho = 0.04;
  GridSpec grid{384, 8, 56.0};
  double cfl = 0.25;
  double dissipation = 0.002;
  double T_final = 50.0;
  int N_d = 1;  // diagnostic vector-field order
  GaugeMode gauge_mode = GaugeMode::constructed;
  GlMultiplier gl_mult = GlMultiplier::curvature_matched;
  double out_dt = 0.25;  // diagnostics cadence
  bool track_k = true;
  bool track_eikonal = true;
  bool store_extract_stream = false;
  bool store_snapshots = false;
  bool freeze_metric = false;  // evolve phi on a frozen flat metric (regression hook)

  void validate() const;  // enforces eps < rho < sigma < delta, delta-2sigma>1/2, ...
  WeightSpec weights(WeightFamily f) const { return WeightSpec{delta, sigma, mu, f}; }
};

struct FieldState {
  Grid phi, phi_t;
  TensorGrid gtil, gtil_t;
  Grid k, k_t;
  Grid eik;  // eikonal level set, u(0) = r
  double t = 0;
};

// time derivative of the full state (same layout)
using StateDeriv = FieldState;

struct Snapshot {
  double t = 0;
  Grid phi, phi_t, phi_tt;
  TensorGrid gtil, gtil_t;
  Grid k;
  // metric combinations for the profile-extraction integrand:
  // m[alpha] = g^{t alpha} sqrt(|det g|_(t,r,th)) in (t,r,th) indices
  std::array<Grid, 3> extract_m;
};

struct ExtractStream {
  double dt = 0;  // spacing of the stored slices
  std::vector<double> times;
  std::vector<Grid> cLL;     // (1/4) g_LL
  std::vector<Grid> source;  // -1/2 gtil_{L Lbar}/r - 1/2 F2
};

struct DiagRow {
  double t = 0;
  double matter_energy = 0;      // int (phi_t^2 + |grad phi|^2) dx
  double sup_phi = 0, origin_phi = 0;
  double sup_gtil = 0;
  double l2_dgLbLb = 0;          // || d gtil_{Lbar Lbar} ||_L2
  double gauge_res_sup = 0, gauge_res_l2 = 0;
  double ham_sup = 0, mom_sup = 0;
  double delta_h = 0;
  double cone_level = 0;         // max eikonal level over the phi support
  double support_viol = 0;
  double sup_k = 0;
  double e_w_phi = 0, e_w1_gtil = 0, e_w2_gtil1 = 0;  // weighted energies
  double qtt_w_phi = 0, flux_w_phi = 0, wgrad_phi = 0;  // energy-inequality pieces
  double wc_LL = 0, wc_UL = 0, wc_UU = 0, wc_ref = 0;   // wave-condition goodness
  double momentum1 = 0, momentum2 = 0;
};

std::string diag_header();
std::string diag_to_csv(const DiagRow& r);

// d_t^2-resolved reduced wave operator right-hand side:
//   u_tt = [f - 2 g^{ti} d_i u_t - g^{ij} d_ij u + H^t u_t + H^i d_i u] / g^{tt}
// throws if g^{tt} >= 0 anywhere (loss of the time function)
Grid reduced_wave_apply(const TensorGrid& g, const std::array<Grid, 3>& H, const Grid& u,
                        const Grid& ut, const Grid* f = nullptr);

// constraint residuals of the induced (gbar, K) data against the matter terms
struct ConstraintResiduals {
  Grid ham;
  std::array<Grid, 2> mom;
  double ham_sup = 0, mom_sup = 0;
};
ConstraintResiduals constraint_residuals(const MetricGrids& m, const Grid& phi,
                                         const Grid& phi_t);

class Evolver {
 public:
  Evolver(RunConfig cfg, Background bg);

  // builds the state from scalar-field data: gtil = 0, gtil_t chosen so the
  // generalized wave coordinate condition holds exactly (discretely) at t=0
  static std::tuple<FieldState, ACoeffs, BProfile> initial_data(const Grid& phi0,
                                                                const Grid& phi1,
                                                                const RunConfig& cfg,
                                                                const BProfile& b = BProfile{});

  const RunConfig& config() const { return cfg_; }
  const Background& background() const { return bg_; }
  FieldState& state() { return st_; }
  const FieldState& state() const { return st_; }
  void set_state(FieldState st) { st_ = std::move(st); }

  double dt() const { return dt_; }
  StateDeriv rhs(const FieldState& s) const;
  void step();

  // run to T_final, recording diagnostics at the configured cadence
  struct RunResult {
    std::vector<DiagRow> rows;
    std::vector<Snapshot> snapshots;
    ExtractStream stream;
  };
  RunResult run(const std::function<void(const DiagRow&)>& on_row = {});

  DiagRow diagnostics(const FieldState& s) const;
  GaugeResidual gauge_residual_of(const FieldState& s) const;
  // full metric grids of a state (g = g_b + gtil)
  MetricGrids metric_of(const FieldState& s) const;
  std::array<Grid, 3> Fb_of(double t) const;
  GaugeSource gauge_source_of(const FieldState& s) const;

  // gtil_1 = gtil - 4 Upsilon(r/t) k dq^2
  TensorGrid gtil1_of(const FieldState& s) const;

 private:
  RunConfig cfg_;
  Background bg_;
  FieldState st_;
  double dt_ = 0;
  std::vector<double> sponge_;  // radial ramp, 1 interior -> 0 at the edge

  struct BgSample {
    TensorGrid g;
    std::array<TensorGrid, 3> dg;
    bool minkowski = false;
  };
  BgSample sample_bg(double t) const;
  void h_rows(double t, std::vector<double>& h, std::vector<double>& h_ds) const;

  friend struct EvolverTestAccess;
};

// default compactly supported Gaussian data of amplitude eps inside B(0,R)
Grid gaussian_data(const GridSpec& spec, double eps, double width, double R);

}  // namespace gwlab
