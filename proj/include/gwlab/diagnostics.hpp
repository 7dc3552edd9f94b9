#pragma once

#include "gwlab/evolve.hpp"
#include "gwlab/frame.hpp"
#include "gwlab/weights.hpp"

namespace gwlab {

// || family^{1/2}(q) d Z^I u ||_L2 for |I| <= 2, from a field jet
double weighted_energy(const FieldJet& u, const std::vector<VectorFieldId>& I,
                       const WeightSpec& family, double t);

// Delta_h(t): the mismatch between the angular moments of h and the field's
// energy / momentum integrals
double delta_h(const Grid& phi, const Grid& phi_t, const std::vector<double>& h_row);

// per-step ratio of [d/dt int Q_TT w + C int w' (good derivs)^2] to
// [(eps/(1+t)) int w (du)^2 + int w |f du_t|], from recorded rows (u = phi,
// f = 0); C is the flat-estimate constant 1/2
struct EnergyMarginSeries {
  std::vector<double> t;
  std::vector<double> ratio;
  double max_ratio = 0;
};
EnergyMarginSeries energy_inequality_margin(const std::vector<DiagRow>& rows, double eps);

// ---------------------------------------------------------------------------
// h-extraction: backward beta transport along the stored stream, then the
// weighted flux integral on each snapshot
// ---------------------------------------------------------------------------
struct HExtract {
  std::vector<double> s_values;                // s = 2 t_snapshot
  std::vector<std::vector<double>> h_rows;      // hcheck(theta_i, s)
  std::vector<std::vector<double>> hprime_rows; // psi-extended profile
  std::vector<Grid> beta;                      // beta at the snapshot times
  Grid F1, F2;                                 // wave-condition split, final snapshot
  // consistency series: ||hcheck(.,2t) + 2 int dr phi dt phi r dr|| relative
  std::vector<double> consistency;
};

HExtract extract_h(const Evolver::RunResult& run, const GridSpec& spec,
                   const CutoffSpec& cut, double T);

// serialize hcheck rows in the BProfile Fourier-table format
std::string hextract_to_text(const HExtract& h, int n_theta, int n_modes);

// eikonal cone margin from recorded rows: sup_t (cone level) - (R + 1/2)
double cone_margin(const std::vector<DiagRow>& rows, double R);

// convenience: fit a named diagnostic column over [t_lo, t_hi]
FitResult fit_rows(const std::vector<DiagRow>& rows, double DiagRow::*col, double t_lo,
                   double t_hi);

}  // namespace gwlab
