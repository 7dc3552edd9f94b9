#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwlab {

constexpr double pi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Polar grid. Radial points are cell-centered, r_j = (j+1/2) dr, so the
// coordinate singularity at r=0 is never a grid point. theta is periodic,
// theta_i = i dtheta, n_theta a power of two. Fields cross the origin by
// parity folding: f(-r, theta) = f(r, theta+pi), which is an exact index
// shift of n_theta/2.
// ---------------------------------------------------------------------------
struct GridSpec {
  int n_r = 0;
  int n_theta = 0;
  double r_max = 0.0;

  double dr() const { return r_max / n_r; }
  double dtheta() const { return 2.0 * pi / n_theta; }
  double r(int j) const { return (j + 0.5) * dr(); }
  double theta(int i) const { return i * dtheta(); }
  int npts() const { return n_r * n_theta; }
  bool operator==(const GridSpec&) const = default;

  static bool power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }
  void validate() const {
    if (n_r < 8) throw std::invalid_argument("GridSpec: n_r must be >= 8");
    if (n_theta < 8 || !power_of_two(n_theta))
      throw std::invalid_argument("GridSpec: n_theta must be a power of two >= 8");
    if (!(r_max > 0)) throw std::invalid_argument("GridSpec: r_max must be positive");
  }
};

struct Grid {
  GridSpec spec;
  std::vector<double> v;

  Grid() = default;
  explicit Grid(const GridSpec& s, double fill = 0.0) : spec(s), v(s.npts(), fill) {}

  double& at(int j, int i) { return v[size_t(j) * spec.n_theta + i]; }
  double at(int j, int i) const { return v[size_t(j) * spec.n_theta + i]; }

  Grid& operator+=(const Grid& o) { for (size_t k = 0; k < v.size(); ++k) v[k] += o.v[k]; return *this; }
  Grid& operator-=(const Grid& o) { for (size_t k = 0; k < v.size(); ++k) v[k] -= o.v[k]; return *this; }
  Grid& operator*=(double a)      { for (double& x : v) x *= a; return *this; }
  void axpy(double a, const Grid& o) { for (size_t k = 0; k < v.size(); ++k) v[k] += a * o.v[k]; }
  void fill(double a) { for (double& x : v) x = a; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
};

Grid operator+(Grid a, const Grid& b);
Grid operator-(Grid a, const Grid& b);
Grid operator*(double a, Grid b);

// in-place complex radix-2 FFT (size must be a power of two)
void fft_complex(std::vector<std::complex<double>>& a, bool inverse);

// Pointwise sample of an analytic function f(r, theta).
Grid sample(const GridSpec& s, const std::function<double(double, double)>& f);

// ---------------------------------------------------------------------------
// Spectral differentiation in theta (dense DFT-built matrices; n_theta is
// small). First derivative zeroes the Nyquist mode; second keeps -k^2 on it.
// ---------------------------------------------------------------------------
class ThetaDeriv {
 public:
  explicit ThetaDeriv(int n);
  void d1(const double* in, double* out) const;  // one ring
  void d2(const double* in, double* out) const;
  int n() const { return n_; }

 private:
  int n_;
  std::vector<double> m1_, m2_;  // n x n row-major
};

const ThetaDeriv& theta_deriv(int n);  // cached per n

Grid dtheta(const Grid& u);
Grid dtheta2(const Grid& u);

// Radial derivatives: centered 4th order in the interior, parity ghosts
// across the origin, 4th-order biased stencils at the outer edge.
Grid dr(const Grid& u);
Grid dr2(const Grid& u);
// d/dr of a field already differentiated in theta (no special casing needed,
// parity of u_theta is the same index-shift rule).

// Cartesian first derivatives d/dx1, d/dx2 from polar ones.
void cartesian_grad(const Grid& u, Grid& d1, Grid& d2);
// Cartesian Hessian entries (d11, d12, d22).
void cartesian_hess(const Grid& u, Grid& d11, Grid& d12, Grid& d22);
// gradient and Hessian together, sharing the base passes
struct Derivs {
  Grid d1, d2, d11, d12, d22;
};
Derivs cartesian_all(const Grid& u);
// Flat Laplacian u_rr + u_r/r + u_thth/r^2.
Grid laplacian(const Grid& u);

// ---------------------------------------------------------------------------
// Integrals over R^2 with the flat measure r dr dtheta. Midpoint in r with a
// one-term Euler-Maclaurin end correction (4th order), exact trapezoid (= any
// quadrature) in the periodic direction.
// ---------------------------------------------------------------------------
double integrate(const Grid& u);                     // integral of u r dr dth
double l2_norm(const Grid& u);                       // sqrt(int u^2 r dr dth)
double ring_integral(const Grid& u, int j);          // int u(r_j, th) dth

// Even-parity extrapolation of the theta-mean to r = 0.
double origin_value(const Grid& u);

// Kreiss-Oliger style radial dissipation (6th difference) plus a smooth
// spectral roll-off of the top third of theta modes. Returns D[u]; a stepper
// adds eps * D[u] * (reference speed / dr).
Grid dissipation(const Grid& u);

// ---------------------------------------------------------------------------
// Small dense symmetric 3x3 (t, x1, x2) metric algebra.
// ---------------------------------------------------------------------------
struct Sym3 {
  // order: tt, t1, t2, 11, 12, 22
  std::array<double, 6> a{};

  double& operator()(int mu, int nu) { return a[index(mu, nu)]; }
  double operator()(int mu, int nu) const { return a[index(mu, nu)]; }

  static int index(int mu, int nu) {
    if (mu > nu) std::swap(mu, nu);
    static constexpr int map[3][3] = {{0, 1, 2}, {-1, 3, 4}, {-1, -1, 5}};
    return map[mu][nu];
  }

  Sym3& operator+=(const Sym3& o) { for (int k = 0; k < 6; ++k) a[k] += o.a[k]; return *this; }
  Sym3& operator-=(const Sym3& o) { for (int k = 0; k < 6; ++k) a[k] -= o.a[k]; return *this; }
  Sym3& operator*=(double c)      { for (double& x : a)        x *= c;          return *this; }

  static Sym3 minkowski() { Sym3 m; m.a = {-1, 0, 0, 1, 0, 1}; return m; }

  double det() const;
  Sym3 inverse() const;  // throws on |det| ~ 0
  double max_abs() const {
    double m = 0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
  }
};

Sym3 operator+(Sym3 a, const Sym3& b);
Sym3 operator-(Sym3 a, const Sym3& b);
Sym3 operator*(double c, Sym3 a);

// 6 grids holding a symmetric tensor field, component order as Sym3.
struct TensorGrid {
  GridSpec spec;
  std::array<Grid, 6> c;

  TensorGrid() = default;
  explicit TensorGrid(const GridSpec& s) : spec(s) { for (auto& g : c) g = Grid(s); }
  Sym3 at(int j, int i) const {
    Sym3 m;
    for (int k = 0; k < 6; ++k) m.a[k] = c[k].at(j, i);
    return m;
  }
  void set(int j, int i, const Sym3& m) {
    for (int k = 0; k < 6; ++k) c[k].at(j, i) = m.a[k];
  }
  TensorGrid& operator+=(const TensorGrid& o) { for (int k = 0; k < 6; ++k) c[k] += o.c[k]; return *this; }
  void axpy(double a, const TensorGrid& o) { for (int k = 0; k < 6; ++k) c[k].axpy(a, o.c[k]); }
  void fill(double a) { for (auto& g : c) g.fill(a); }
  double max_abs() const {
    double m = 0;
    for (auto& g : c) m = std::max(m, g.max_abs());
    return m;
  }
};

// least-squares power-law fit: slope and stderr of log(value) vs log(1+t)
struct FitResult {
  double exponent = 0.0;
  double stderr_ = 0.0;
  int n_used = 0;
};
FitResult fit_decay(const std::vector<double>& t, const std::vector<double>& val,
                    double t_lo, double t_hi);

uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull);

}  // namespace gwlab
