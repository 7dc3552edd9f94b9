// gwlab: run orchestration for the 2+1 wave-gauge evolution laboratory.
// Subcommands: evolve, verify, fit, solve-b, extract-h.

#include <CLI11.hpp>

#include "gwlab/bsolve.hpp"
#include "gwlab/config.hpp"
#include "gwlab/diagnostics.hpp"

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace gwlab;

namespace {

Background background_for(const ParsedConfig& pc, const ACoeffs& a, const BProfile& b) {
  if (pc.run.gauge_mode == GaugeMode::plain_harmonic)
    return Background(CutoffSpec{pc.run.R}, ACoeffs{}, BProfile{});
  return Background(CutoffSpec{pc.run.R}, a, b);
}

int cmd_evolve(const std::string& config_path, const std::string& out_override,
               int nr_override, const std::string& mode_override, bool with_extract) {
  ParsedConfig pc = parse_config_file(config_path);
  if (!out_override.empty()) pc.out_dir = out_override;
  if (nr_override > 0) {
    pc.run.grid.n_r = nr_override;
    pc.echo["n_r"] = std::to_string(nr_override);
  }
  if (!mode_override.empty()) {
    if (mode_override == "constructed") pc.run.gauge_mode = GaugeMode::constructed;
    else if (mode_override == "plain_harmonic") pc.run.gauge_mode = GaugeMode::plain_harmonic;
    else throw std::invalid_argument("gauge-mode override: constructed or plain_harmonic");
    pc.echo["gauge_mode"] = mode_override;
  }
  if (with_extract) {
    pc.run.store_snapshots = true;
    pc.run.store_extract_stream = true;
  }
  pc.run.validate();

  const GridSpec& sp = pc.run.grid;
  Grid phi0 = gaussian_data(sp, pc.run.eps, pc.run.width, pc.run.R);
  Grid phi1(sp);
  BProfile b;
  if (!pc.bprofile_file.empty()) b = BProfile::from_text(read_file(pc.bprofile_file));
  auto [st, a, bprof] = Evolver::initial_data(phi0, phi1, pc.run, b);
  Evolver ev(pc.run, background_for(pc, a, bprof));
  ev.set_state(std::move(st));

  std::ostringstream diag;
  diag << diag_header() << "\n";
  auto res = ev.run([&](const DiagRow& r) { diag << diag_to_csv(r) << "\n"; });

  std::vector<std::string> files;
  write_file(pc.out_dir + "/diagnostics.csv", diag.str());
  files.push_back("diagnostics.csv");
  write_file(pc.out_dir + "/acoeffs.txt", acoeffs_to_text(a));
  files.push_back("acoeffs.txt");
  if (!bprof.is_zero()) {
    write_file(pc.out_dir + "/bprofile.txt", bprof.to_text());
    files.push_back("bprofile.txt");
  }

  if (with_extract) {
    auto hx = extract_h(res, sp, CutoffSpec{pc.run.R}, pc.run.T_final);
    write_file(pc.out_dir + "/hcheck.txt",
               hextract_to_text(hx, sp.n_theta, std::min(4, sp.n_theta / 3)));
    files.push_back("hcheck.txt");
    std::ostringstream cons;
    cons << "s,consistency\n";
    cons.precision(17);
    for (size_t m = 0; m < hx.s_values.size(); ++m)
      cons << hx.s_values[m] << "," << hx.consistency[m] << "\n";
    write_file(pc.out_dir + "/hcheck_consistency.csv", cons.str());
    files.push_back("hcheck_consistency.csv");
  }

  // final-slice snapshot of the scalar field (self-describing text grid)
  {
    std::ostringstream snap;
    snap.precision(17);
    const FieldState& s = ev.state();
    snap << "grid2d t " << s.t << " field phi n_r " << sp.n_r << " n_theta " << sp.n_theta
         << " r_max " << sp.r_max << "\n";
    for (int j = 0; j < sp.n_r; ++j) {
      for (int i = 0; i < sp.n_theta; ++i) snap << s.phi.at(j, i) << " ";
      snap << "\n";
    }
    write_file(pc.out_dir + "/phi_final.txt", snap.str());
    files.push_back("phi_final.txt");
  }
  write_manifest(pc.out_dir, pc, files);
  std::cout << "run complete: " << res.rows.size() << " diagnostic rows -> " << pc.out_dir
            << "\n";
  return 0;
}

struct SuiteReport {
  int failures = 0;
  void item(const std::string& suite, const std::string& name, double value, double threshold,
            bool pass) {
    std::cout << "suite=" << suite << " case=" << name << " value=" << value
              << " threshold=" << threshold << " status=" << (pass ? "PASS" : "FAIL") << "\n";
    if (!pass) ++failures;
  }
};

int cmd_verify(const std::string& suite) {
  SuiteReport rep;
  if (suite == "ricci") {
    ACoeffs a{0.01, 0.005, 0.005, {}, {}};
    Background bg(CutoffSpec{2.0}, a, BProfile{});
    MetricFunc ga = [&](double t, double x1, double x2) {
      double r = std::hypot(x1, x2);
      return bg.g(t, r, std::atan2(x2, x1));
    };
    std::vector<std::array<double, 3>> pts = {{0.0, 8.0, 0.3}, {1.0, 9.5, 2.0}, {2.0, 11.0, 4.4}};
    double e1 = 0, e2 = 0;
    for (auto [t, r, th] : pts) {
      double x1 = r * std::cos(th), x2 = r * std::sin(th);
      e1 = std::max(e1, ricci_fd(ga, t, x1, x2, 0.08).max_abs());
      e2 = std::max(e2, ricci_fd(ga, t, x1, x2, 0.04).max_abs());
    }
    double order = std::log2(e1 / e2);
    rep.item("ricci", "ga_flat_convergence_order", order, 1.8, order >= 1.8);
  } else if (suite == "gauge") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 5; ++trial) {
      struct Bump { int c; double A, x0, y0, w; };
      std::vector<Bump> bumps;
      for (int k = 0; k < 8; ++k)
        bumps.push_back({std::uniform_int_distribution<int>(0, 5)(rng), 0.05 * u(rng),
                         1.5 * u(rng), 1.5 * u(rng), 1.0 + 0.5 * u(rng)});
      auto fill = [&](const GridSpec& sp, MetricGrids& m) {
        m.g = TensorGrid(sp);
        m.gt = TensorGrid(sp);
        for (int j = 0; j < sp.n_r; ++j)
          for (int i = 0; i < sp.n_theta; ++i) {
            double x = sp.r(j) * std::cos(sp.theta(i)), y = sp.r(j) * std::sin(sp.theta(i));
            Sym3 g = Sym3::minkowski();
            for (auto& bp : bumps) {
              double d2 = (x - bp.x0) * (x - bp.x0) + (y - bp.y0) * (y - bp.y0);
              g.a[bp.c] += bp.A * std::exp(-d2 / (bp.w * bp.w));
            }
            m.g.set(j, i, g);
          }
      };
      auto maxdiff = [](const std::array<Grid, 3>& A, const std::array<Grid, 3>& B) {
        double m = 0;
        const GridSpec& sp = A[0].spec;
        for (int al = 0; al < 3; ++al)
          for (int j = 0; j < sp.n_r - 8; ++j)
            for (int i = 0; i < sp.n_theta; ++i)
              m = std::max(m, std::abs(A[al].at(j, i) - B[al].at(j, i)));
        return m;
      };
      MetricGrids m1, m2;
      fill(GridSpec{48, 32, 4.0}, m1);
      fill(GridSpec{96, 64, 4.0}, m2);
      double c1 = maxdiff(christoffel_H(m1), wave_gauge_H_divergence(m1));
      double c2 = maxdiff(christoffel_H(m2), wave_gauge_H_divergence(m2));
      double order = std::log2(c1 / std::max(c2, 1e-16));
      rep.item("gauge", "two_formula_order_trial" + std::to_string(trial), order, 2.0,
               order >= 2.0 || c2 < 1e-12);
    }
  } else if (suite == "toolbox") {
    GridSpec sp{192, 16, 40.0};
    WeightSpec v{0.85, 0.15, 0.25, WeightFamily::w};
    double t = 20.0;
    FieldJet f;
    f.u = sample(sp, [&](double r, double th) {
      return std::exp(-std::pow(r - t, 2)) * (1 + 0.3 * std::cos(th));
    });
    f.ut = sample(sp, [&](double r, double th) {
      return 2 * (r - t) * std::exp(-std::pow(r - t, 2)) * (1 + 0.3 * std::cos(th));
    });
    f.utt = sample(sp, [&](double r, double th) {
      double q = r - t;
      return (4 * q * q - 2) * std::exp(-q * q) * (1 + 0.3 * std::cos(th));
    });
    double ks = klainerman_sobolev_margin(f, v, t);
    rep.item("toolbox", "ks_margin_finite", ks, 1e6, std::isfinite(ks) && ks > 0 && ks < 1e6);
    FieldJet f2 = f;
    f2.u *= 2.0;
    f2.ut *= 2.0;
    f2.utt *= 2.0;
    double ks2 = klainerman_sobolev_margin(f2, v, t);
    rep.item("toolbox", "ks_scale_invariance", std::abs(ks2 - ks) / ks, 1e-12,
             std::abs(ks2 - ks) / ks < 1e-12);
    Grid g = sample(sp, [&](double r, double) { return std::exp(-std::pow(r - t, 2)); });
    double hm = hardy_margin(g, -0.5, 2.0, t);
    rep.item("toolbox", "hardy_margin_finite", hm, 1e6, std::isfinite(hm) && hm > 0 && hm < 1e6);
  } else if (suite == "commutators") {
    auto defect_at = [](int nr, VectorFieldId z) {
      GridSpec sp{nr, 16, 6.0};
      TimeField u = [sp](double t) {
        return sample(sp, [t](double r, double th) {
          double x = r * std::cos(th) - 0.2 * t, y = r * std::sin(th) + 0.1;
          return std::exp(-(x * x + y * y) / (1.0 + 0.1 * t));
        });
      };
      return commutator_defect(u, z, 1.0, sp, 0.5 * sp.dr());
    };
    for (auto z : all_vector_fields) {
      double d1 = defect_at(40, z), d2 = defect_at(80, z);
      double ratio = d1 / std::max(d2, 1e-16);
      rep.item("commutators", "defect_converges_Z" + std::to_string(int(z)), ratio, 3.0,
               ratio >= 3.0 || d2 < 1e-9);
    }
    // with C(S) = 2 the S defect is discretization-small; with 0 it is O(1)
    {
      GridSpec sp{80, 16, 6.0};
      TimeField u = [sp](double t) {
        return sample(sp, [t](double r, double th) {
          double x = r * std::cos(th) - 0.2 * t, y = r * std::sin(th) + 0.1;
          return std::exp(-(x * x + y * y) / (1.0 + 0.1 * t));
        });
      };
      double h_t = 0.5 * sp.dr();
      TimeField boxu = tf_box(u, h_t);
      TimeField zu = tf_apply_Z(u, VectorFieldId::S, h_t);
      Grid box_zu = tf_box(zu, h_t)(1.0);
      Grid z_boxu = tf_apply_Z(boxu, VectorFieldId::S, h_t)(1.0);
      Grid bu = boxu(1.0);
      double with2 = 0, with0 = 0;
      for (int j = 0; j < sp.n_r - 6; ++j)
        for (int i = 0; i < sp.n_theta; ++i) {
          with2 = std::max(with2,
                           std::abs(box_zu.at(j, i) - z_boxu.at(j, i) - 2 * bu.at(j, i)));
          with0 = std::max(with0, std::abs(box_zu.at(j, i) - z_boxu.at(j, i)));
        }
      rep.item("commutators", "C_of_S_is_2", with0 / with2, 20.0, with0 / with2 > 20.0);
    }
  } else if (suite == "bsolve") {
    auto res = solve_b_from_h([](double th) { return 1e-4 * std::cos(2 * th); }, ACoeffs{});
    rep.item("bsolve", "substitution_residual", res.residual, 1e-10, res.residual <= 1e-10);
    rep.item("bsolve", "integral_condition", std::abs(res.intb), 1e-12,
             std::abs(res.intb) <= 1e-12);
    for (int k : {2, 3}) {
      double delta = 1e-4;
      auto plus = solve_b_from_h([&](double th) { return delta * std::cos(k * th); }, ACoeffs{});
      auto minus = solve_b_from_h([&](double th) { return -delta * std::cos(k * th); }, ACoeffs{});
      double coeff = (plus.b_cos[k] - minus.b_cos[k]) / (2 * delta);
      double exact = 1.0 / (2.0 * (k * k - 1));
      double relerr = std::abs(coeff - exact) / exact;
      rep.item("bsolve", "linear_response_k" + std::to_string(k), relerr, 1e-6, relerr < 1e-6);
    }
  } else {
    std::cerr << "unknown suite: " << suite << "\n";
    return 2;
  }
  return rep.failures == 0 ? 0 : 1;
}

int cmd_fit(const std::string& file, const std::string& column, double t_lo, double t_hi) {
  std::ifstream f(file);
  if (!f) throw std::runtime_error("cannot open " + file);
  std::string header;
  std::getline(f, header);
  std::vector<std::string> cols;
  {
    std::stringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  int tcol = -1, vcol = -1;
  for (size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] == "t") tcol = int(k);
    if (cols[k] == column) vcol = int(k);
  }
  if (tcol < 0 || vcol < 0)
    throw std::runtime_error("column not found: " + column + " (header: " + header + ")");
  std::vector<double> ts, vs;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    int k = 0;
    double tv = 0, vv = 0;
    while (std::getline(ls, cell, ',')) {
      if (k == tcol) tv = std::stod(cell);
      if (k == vcol) vv = std::stod(cell);
      ++k;
    }
    ts.push_back(tv);
    vs.push_back(vv);
  }
  auto fit = fit_decay(ts, vs, t_lo, t_hi);
  std::cout << "exponent " << fit.exponent << " stderr " << fit.stderr_ << " n " << fit.n_used
            << "\n";
  return 0;
}

int cmd_solve_b(const std::string& h_file, double amp, int mode, double a0, double tol,
                const std::string& out) {
  ACoeffs a;
  a.a0 = a0;
  BSolveOptions opt;
  opt.tol = tol;
  if (!h_file.empty()) {
    // h given as a profile table: solve slice-wise on the tabulated s-grid
    BProfile h = BProfile::from_text(read_file(h_file));
    std::istringstream is(read_file(h_file));
    std::string tag, ver, key;
    size_t ns;
    int nm;
    is >> tag >> ver >> key >> ns >> key >> nm;
    std::vector<double> sg(ns);
    {
      std::vector<double> tmp(2 * nm + 1);
      for (size_t k2 = 0; k2 < ns; ++k2) {
        is >> sg[k2];
        for (auto& v : tmp) is >> v;
      }
    }
    int nm_out = 8;
    std::vector<std::vector<double>> rows;
    double worst_res = 0;
    for (double s : sg) {
      BProfile::Ring ring = h.prepare(s);
      auto res = solve_b_from_h([&](double th) { return h.slots(ring, th).B[0][0]; }, a, opt);
      worst_res = std::max(worst_res, res.residual);
      std::vector<double> row(2 * nm_out + 1, 0.0);
      row[0] = res.b_cos[0];
      for (int m = 1; m <= nm_out; ++m) {
        row[2 * m - 1] = res.b_cos[m];
        row[2 * m] = res.b_sin[m];
      }
      rows.push_back(row);
    }
    BProfile b = BProfile::tabulated(sg, rows, nm_out);
    write_file(out, b.to_text());
    std::cout << "solved " << sg.size() << " slices, worst residual " << worst_res << " -> "
              << out << "\n";
    return 0;
  }
  auto res = solve_b_from_h([&](double th) { return amp * std::cos(mode * th); }, a, opt);
  std::cout << "b0 " << res.b0 << " b1 " << res.b1 << " b2 " << res.b2 << "\n";
  std::cout << "residual " << res.residual << " intb " << res.intb << " iterations "
            << res.iterations << "\n";
  if (!out.empty()) {
    int nm_out = int(res.b_cos.size()) - 1;
    std::vector<double> row(2 * nm_out + 1, 0.0);
    row[0] = res.b_cos[0];
    for (int m = 1; m <= nm_out; ++m) {
      row[2 * m - 1] = res.b_cos[m];
      row[2 * m] = res.b_sin[m];
    }
    std::vector<double> sg = {0.0, 1.0};
    std::vector<std::vector<double>> rows = {row, row};
    write_file(out, BProfile::tabulated(sg, rows, nm_out).to_text());
    std::cout << "profile -> " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2+1 wave-gauge evolution laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, gauge_mode, suite, fit_file, fit_col = "sup_phi";
  std::string h_file, b_out = "b_solved.txt";
  int nr_override = 0, mode = 2;
  double t_lo = 5.0, t_hi = 1e9, amp = 1e-4, a0 = 0.0, tol = 1e-10;

  auto* ev = app.add_subcommand("evolve", "run the coupled evolution from a config file");
  ev->add_option("--config", config_path, "configuration file")->required();
  ev->add_option("--out", out_dir, "output directory override");
  ev->add_option("--n-r", nr_override, "radial resolution override");
  ev->add_option("--gauge-mode", gauge_mode, "constructed | plain_harmonic");

  auto* ex = app.add_subcommand("extract-h", "run and extract the angular profile");
  ex->add_option("--config", config_path, "configuration file")->required();
  ex->add_option("--out", out_dir, "output directory override");

  auto* vf = app.add_subcommand("verify", "run a pinned property suite");
  vf->add_option("--suite", suite, "ricci | gauge | toolbox | commutators | bsolve")
      ->required();

  auto* ft = app.add_subcommand("fit", "fit a decay exponent from a diagnostics file");
  ft->add_option("--file", fit_file, "comma-separated diagnostics file")->required();
  ft->add_option("--col", fit_col, "column name (default sup_phi)");
  ft->add_option("--t-lo", t_lo, "window start");
  ft->add_option("--t-hi", t_hi, "window end");

  auto* sb = app.add_subcommand("solve-b", "solve the circle problem for b from a target h");
  sb->add_option("--h-file", h_file, "h profile table (solved slice-wise)");
  sb->add_option("--amp", amp, "quick form: h = amp cos(mode theta)");
  sb->add_option("--mode", mode, "quick form angular mode");
  sb->add_option("--a0", a0, "deficit coefficient a0");
  sb->add_option("--tol", tol, "residual tolerance");
  sb->add_option("--out", b_out, "output profile file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ev) return cmd_evolve(config_path, out_dir, nr_override, gauge_mode, false);
    if (*ex) return cmd_evolve(config_path, out_dir, 0, "", true);
    if (*vf) return cmd_verify(suite);
    if (*ft) return cmd_fit(fit_file, fit_col, t_lo, t_hi);
    if (*sb) return cmd_solve_b(h_file, amp, mode, a0, tol, b_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
