#include "gwlab/core.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace gwlab {

Grid operator+(Grid a, const Grid& b) { a += b; return a; }
Grid operator-(Grid a, const Grid& b) { a -= b; return a; }
Grid operator*(double a, Grid b) { b *= a; return b; }

Grid sample(const GridSpec& s, const std::function<double(double, double)>& f) {
  Grid g(s);
  for (int j = 0; j < s.n_r; ++j)
    for (int i = 0; i < s.n_theta; ++i) g.at(j, i) = f(s.r(j), s.theta(i));
  return g;
}

void fft_complex(std::vector<std::complex<double>>& a, bool inverse) {
  const int n = int(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * pi / len * (inverse ? 1 : -1);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (int k = 0; k < len / 2; ++k) {
        auto u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= double(n);
}

namespace {

void fft(std::vector<std::complex<double>>& a, bool inverse) { fft_complex(a, inverse); }

// Fornberg finite-difference weights for derivative m at point x0 given nodes.
std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m) {
  const int n = int(x.size());
  std::vector<std::vector<std::vector<double>>> d(
      m + 1, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
  d[0][0][0] = 1.0;
  double c1 = 1.0;
  for (int i = 1; i < n; ++i) {
    double c2 = 1.0;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      for (int k = 0; k <= std::min(i, m); ++k) {
        double prev = (k > 0) ? d[k - 1][i - 1][j] : 0.0;
        d[k][i][j] = ((x[i] - x0) * d[k][i - 1][j] - k * prev) / c3;
      }
    }
    for (int k = 0; k <= std::min(i, m); ++k) {
      double prev = (k > 0) ? d[k - 1][i - 1][i - 1] : 0.0;
      d[k][i][i] = c1 / c2 * (k * prev - (x[i - 1] - x0) * d[k][i - 1][i - 1]);
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = d[m][n - 1][j];
  return w;
}

}  // namespace

ThetaDeriv::ThetaDeriv(int n) : n_(n), m1_(size_t(n) * n), m2_(size_t(n) * n) {
  std::vector<std::complex<double>> col(n);
  for (int c = 0; c < n; ++c) {
    std::fill(col.begin(), col.end(), std::complex<double>(0.0));
    col[c] = 1.0;
    fft(col, false);
    auto spec1 = col, spec2 = col;
    for (int k = 0; k < n; ++k) {
      int kk = (k <= n / 2) ? k : k - n;
      // odd derivative: drop the Nyquist mode; even: keep -k^2 on it
      double k1 = (k == n / 2) ? 0.0 : double(kk);
      spec1[k] *= std::complex<double>(0.0, k1);
      spec2[k] *= -double(kk) * double(kk);
    }
    fft(spec1, true);
    fft(spec2, true);
    for (int i = 0; i < n; ++i) {
      m1_[size_t(i) * n + c] = spec1[i].real();
      m2_[size_t(i) * n + c] = spec2[i].real();
    }
  }
}

void ThetaDeriv::d1(const double* in, double* out) const {
  for (int i = 0; i < n_; ++i) {
    const double* row = &m1_[size_t(i) * n_];
    double s = 0;
    for (int j = 0; j < n_; ++j) s += row[j] * in[j];
    out[i] = s;
  }
}

void ThetaDeriv::d2(const double* in, double* out) const {
  for (int i = 0; i < n_; ++i) {
    const double* row = &m2_[size_t(i) * n_];
    double s = 0;
    for (int j = 0; j < n_; ++j) s += row[j] * in[j];
    out[i] = s;
  }
}

const ThetaDeriv& theta_deriv(int n) {
  static std::map<int, ThetaDeriv> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, ThetaDeriv(n)).first;
  return it->second;
}

Grid dtheta(const Grid& u) {
  Grid out(u.spec);
  const auto& td = theta_deriv(u.spec.n_theta);
  for (int j = 0; j < u.spec.n_r; ++j)
    td.d1(&u.v[size_t(j) * u.spec.n_theta], &out.v[size_t(j) * u.spec.n_theta]);
  return out;
}

Grid dtheta2(const Grid& u) {
  Grid out(u.spec);
  const auto& td = theta_deriv(u.spec.n_theta);
  for (int j = 0; j < u.spec.n_r; ++j)
    td.d2(&u.v[size_t(j) * u.spec.n_theta], &out.v[size_t(j) * u.spec.n_theta]);
  return out;
}

// ---------------------------------------------------------------------------
// radial derivatives with parity ghosts
// ---------------------------------------------------------------------------
namespace {

// value at ghost ring g<0, direction i: same ray through the origin
inline double ghost(const Grid& u, int g, int i) {
  int m = -g - 1;
  int nt = u.spec.n_theta;
  return u.at(m, (i + nt / 2) % nt);
}

inline double ring_val(const Grid& u, int j, int i) {
  return (j >= 0) ? u.at(j, i) : ghost(u, j, i);
}

struct RadialStencils {
  std::vector<double> c1_int, c2_int;        // centered, offsets -2..2
  std::vector<double> c1_b1, c1_b0;          // first deriv at j=n-2 (-3..1), j=n-1 (-4..0)
  std::vector<double> c2_b1, c2_b0;          // second deriv, offsets -4..1 and -5..0
  explicit RadialStencils(double h) {
    auto nodes = [&](int lo, int hi) {
      std::vector<double> x;
      for (int k = lo; k <= hi; ++k) x.push_back(k * h);
      return x;
    };
    c1_int = fd_weights(0.0, nodes(-2, 2), 1);
    c2_int = fd_weights(0.0, nodes(-2, 2), 2);
    c1_b1 = fd_weights(0.0, nodes(-3, 1), 1);
    c1_b0 = fd_weights(0.0, nodes(-4, 0), 1);
    c2_b1 = fd_weights(0.0, nodes(-4, 1), 2);
    c2_b0 = fd_weights(0.0, nodes(-5, 0), 2);
  }
};

const RadialStencils& stencils_for(double h) {
  static std::map<double, RadialStencils> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(h);
  if (it == cache.end()) it = cache.emplace(h, RadialStencils(h)).first;
  return it->second;
}

}  // namespace

Grid dr(const Grid& u) {
  Grid out(u.spec);
  const int nr = u.spec.n_r, nt = u.spec.n_theta;
  const auto& st = stencils_for(u.spec.dr());
  for (int j = 0; j < nr; ++j) {
    const bool inner = j < 2, outer = j >= nr - 2;
    for (int i = 0; i < nt; ++i) {
      double s = 0;
      if (!inner && !outer) {
        const double* c = st.c1_int.data();
        s = c[0] * u.at(j - 2, i) + c[1] * u.at(j - 1, i) + c[2] * u.at(j, i) +
            c[3] * u.at(j + 1, i) + c[4] * u.at(j + 2, i);
      } else if (inner) {
        const double* c = st.c1_int.data();
        for (int k = -2; k <= 2; ++k) s += c[k + 2] * ring_val(u, j + k, i);
      } else if (j == nr - 2) {
        const double* c = st.c1_b1.data();
        for (int k = -3; k <= 1; ++k) s += c[k + 3] * u.at(j + k, i);
      } else {
        const double* c = st.c1_b0.data();
        for (int k = -4; k <= 0; ++k) s += c[k + 4] * u.at(j + k, i);
      }
      out.at(j, i) = s;
    }
  }
  return out;
}

Grid dr2(const Grid& u) {
  Grid out(u.spec);
  const int nr = u.spec.n_r, nt = u.spec.n_theta;
  const auto& st = stencils_for(u.spec.dr());
  for (int j = 0; j < nr; ++j) {
    for (int i = 0; i < nt; ++i) {
      double s = 0;
      if (j >= 2 && j < nr - 2) {
        const double* c = st.c2_int.data();
        s = c[0] * u.at(j - 2, i) + c[1] * u.at(j - 1, i) + c[2] * u.at(j, i) +
            c[3] * u.at(j + 1, i) + c[4] * u.at(j + 2, i);
      } else if (j < 2) {
        const double* c = st.c2_int.data();
        for (int k = -2; k <= 2; ++k) s += c[k + 2] * ring_val(u, j + k, i);
      } else if (j == nr - 2) {
        const double* c = st.c2_b1.data();
        for (int k = -4; k <= 1; ++k) s += c[k + 4] * u.at(j + k, i);
      } else {
        const double* c = st.c2_b0.data();
        for (int k = -5; k <= 0; ++k) s += c[k + 5] * u.at(j + k, i);
      }
      out.at(j, i) = s;
    }
  }
  return out;
}

void cartesian_grad(const Grid& u, Grid& d1, Grid& d2) {
  Grid ur = dr(u), uth = dtheta(u);
  d1 = Grid(u.spec);
  d2 = Grid(u.spec);
  for (int j = 0; j < u.spec.n_r; ++j) {
    double r = u.spec.r(j);
    for (int i = 0; i < u.spec.n_theta; ++i) {
      double th = u.spec.theta(i), c = std::cos(th), s = std::sin(th);
      double a = ur.at(j, i), b = uth.at(j, i) / r;
      d1.at(j, i) = c * a - s * b;
      d2.at(j, i) = s * a + c * b;
    }
  }
}

void cartesian_hess(const Grid& u, Grid& d11, Grid& d12, Grid& d22) {
  Grid ur = dr(u), urr = dr2(u), uth = dtheta(u), uthth = dtheta2(u), urth = dr(uth);
  d11 = Grid(u.spec);
  d12 = Grid(u.spec);
  d22 = Grid(u.spec);
  for (int j = 0; j < u.spec.n_r; ++j) {
    double r = u.spec.r(j);
    for (int i = 0; i < u.spec.n_theta; ++i) {
      double th = u.spec.theta(i), c = std::cos(th), s = std::sin(th);
      double A = urr.at(j, i), B = urth.at(j, i) / r, C = uthth.at(j, i) / (r * r);
      double D = ur.at(j, i) / r, E = uth.at(j, i) / (r * r);
      d11.at(j, i) = c * c * A - 2 * s * c * B + s * s * C + s * s * D + 2 * s * c * E;
      d22.at(j, i) = s * s * A + 2 * s * c * B + c * c * C + c * c * D - 2 * s * c * E;
      d12.at(j, i) = s * c * A + (c * c - s * s) * B - s * c * C - s * c * D - (c * c - s * s) * E;
    }
  }
}

Derivs cartesian_all(const Grid& u) {
  Derivs d;
  Grid ur = dr(u), urr = dr2(u), uth = dtheta(u), uthth = dtheta2(u), urth = dr(uth);
  d.d1 = Grid(u.spec);
  d.d2 = Grid(u.spec);
  d.d11 = Grid(u.spec);
  d.d12 = Grid(u.spec);
  d.d22 = Grid(u.spec);
  for (int j = 0; j < u.spec.n_r; ++j) {
    double r = u.spec.r(j);
    for (int i = 0; i < u.spec.n_theta; ++i) {
      double th = u.spec.theta(i), c = std::cos(th), s = std::sin(th);
      double a = ur.at(j, i), b = uth.at(j, i) / r;
      d.d1.at(j, i) = c * a - s * b;
      d.d2.at(j, i) = s * a + c * b;
      double A = urr.at(j, i), B = urth.at(j, i) / r, C = uthth.at(j, i) / (r * r);
      double D = ur.at(j, i) / r, E = uth.at(j, i) / (r * r);
      d.d11.at(j, i) = c * c * A - 2 * s * c * B + s * s * C + s * s * D + 2 * s * c * E;
      d.d22.at(j, i) = s * s * A + 2 * s * c * B + c * c * C + c * c * D - 2 * s * c * E;
      d.d12.at(j, i) = s * c * A + (c * c - s * s) * B - s * c * C - s * c * D - (c * c - s * s) * E;
    }
  }
  return d;
}

Grid laplacian(const Grid& u) {
  Grid ur = dr(u), urr = dr2(u), uthth = dtheta2(u);
  Grid out(u.spec);
  for (int j = 0; j < u.spec.n_r; ++j) {
    double r = u.spec.r(j);
    for (int i = 0; i < u.spec.n_theta; ++i)
      out.at(j, i) = urr.at(j, i) + ur.at(j, i) / r + uthth.at(j, i) / (r * r);
  }
  return out;
}

double ring_integral(const Grid& u, int j) {
  double s = 0;
  for (int i = 0; i < u.spec.n_theta; ++i) s += u.at(j, i);
  return s * u.spec.dtheta();
}

double integrate(const Grid& u) {
  const int nr = u.spec.n_r;
  const double h = u.spec.dr();
  // g(r) = r * int u dtheta, integrated over [0, r_max]
  std::vector<double> g(nr);
  for (int j = 0; j < nr; ++j) g[j] = u.spec.r(j) * ring_integral(u, j);
  double s = 0;
  for (double x : g) s += x;
  s *= h;
  // one-term Euler-Maclaurin midpoint correction: + h^2/24 (g'(b) - g'(a))
  auto end_slope = [&](bool left) {
    std::vector<double> x(4), w;
    for (int k = 0; k < 4; ++k) x[k] = (k + 0.5) * h;
    double x0 = left ? 0.0 : nr * h;
    std::vector<double> xs(4);
    for (int k = 0; k < 4; ++k) xs[k] = left ? x[k] : (nr * h - x[3 - k]);
    w = fd_weights(x0, xs, 1);
    double d = 0;
    for (int k = 0; k < 4; ++k) d += w[k] * (left ? g[k] : g[nr - 4 + k]);
    return d;
  };
  s += h * h / 24.0 * (end_slope(false) - end_slope(true));
  return s;
}

double l2_norm(const Grid& u) {
  Grid sq(u.spec);
  for (size_t k = 0; k < u.v.size(); ++k) sq.v[k] = u.v[k] * u.v[k];
  return std::sqrt(std::max(0.0, integrate(sq)));
}

double origin_value(const Grid& u) {
  double m0 = ring_integral(u, 0) / (2 * pi), m1 = ring_integral(u, 1) / (2 * pi);
  return (9.0 * m0 - m1) / 8.0;
}

Grid dissipation(const Grid& u) {
  const int nr = u.spec.n_r, nt = u.spec.n_theta;
  Grid out(u.spec);
  // radial 6th difference, parity ghosts at the origin, off near the outer edge
  for (int j = 0; j < nr - 3; ++j) {
    for (int i = 0; i < nt; ++i) {
      double s = ring_val(u, j - 3, i) - 6 * ring_val(u, j - 2, i) + 15 * ring_val(u, j - 1, i) -
                 20 * u.at(j, i) + 15 * u.at(j + 1, i) - 6 * u.at(j + 2, i) + u.at(j + 3, i);
      // D6 acts as -64 sin^6(k dr/2) on a mode, so +D6/64 damps
      out.at(j, i) = s / 64.0;
    }
  }
  // smooth spectral roll-off of the top third of theta modes
  static std::map<int, std::vector<double>> fcache;
  static std::mutex mu;
  const std::vector<double>* M;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = fcache.find(nt);
    if (it == fcache.end()) {
      std::vector<std::complex<double>> col(nt);
      std::vector<double> mat(size_t(nt) * nt);
      for (int c = 0; c < nt; ++c) {
        std::fill(col.begin(), col.end(), std::complex<double>(0.0));
        col[c] = 1.0;
        fft(col, false);
        for (int k = 0; k < nt; ++k) {
          int kk = std::abs((k <= nt / 2) ? k : k - nt);
          double x = (kk - nt / 3.0) / (nt / 2.0 - nt / 3.0);
          double w = (x <= 0) ? 0.0 : (x >= 1 ? 1.0 : x * x * (3 - 2 * x));
          col[k] *= -w;
        }
        fft(col, true);
        for (int i = 0; i < nt; ++i) mat[size_t(i) * nt + c] = col[i].real();
      }
      it = fcache.emplace(nt, std::move(mat)).first;
    }
    M = &it->second;
  }
  for (int j = 0; j < nr - 3; ++j) {
    const double* in = &u.v[size_t(j) * nt];
    double* o = &out.v[size_t(j) * nt];
    for (int i = 0; i < nt; ++i) {
      const double* row = &(*M)[size_t(i) * nt];
      double s = 0;
      for (int c = 0; c < nt; ++c) s += row[c] * in[c];
      o[i] += s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
double Sym3::det() const {
  const Sym3& g = *this;
  return g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(1, 2)) -
         g(0, 1) * (g(0, 1) * g(2, 2) - g(1, 2) * g(0, 2)) +
         g(0, 2) * (g(0, 1) * g(1, 2) - g(1, 1) * g(0, 2));
}

Sym3 Sym3::inverse() const {
  double d = det();
  if (std::abs(d) < 1e-300) throw std::runtime_error("Sym3: singular metric");
  const Sym3& g = *this;
  Sym3 inv;
  inv(0, 0) = (g(1, 1) * g(2, 2) - g(1, 2) * g(1, 2)) / d;
  inv(0, 1) = (g(0, 2) * g(1, 2) - g(0, 1) * g(2, 2)) / d;
  inv(0, 2) = (g(0, 1) * g(1, 2) - g(0, 2) * g(1, 1)) / d;
  inv(1, 1) = (g(0, 0) * g(2, 2) - g(0, 2) * g(0, 2)) / d;
  inv(1, 2) = (g(0, 2) * g(0, 1) - g(0, 0) * g(1, 2)) / d;
  inv(2, 2) = (g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1)) / d;
  return inv;
}

Sym3 operator+(Sym3 a, const Sym3& b) { a += b; return a; }
Sym3 operator-(Sym3 a, const Sym3& b) { a -= b; return a; }
Sym3 operator*(double c, Sym3 a) { a *= c; return a; }

FitResult fit_decay(const std::vector<double>& t, const std::vector<double>& val,
                    double t_lo, double t_hi) {
  std::vector<double> X, Y;
  for (size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_lo || t[k] > t_hi) continue;
    if (!(val[k] > 0)) throw std::invalid_argument("fit_decay: nonpositive value in window");
    X.push_back(std::log(1.0 + t[k]));
    Y.push_back(std::log(val[k]));
  }
  const int n = int(X.size());
  if (n < 2) throw std::invalid_argument("fit_decay: need at least 2 samples in window");
  double mx = 0, my = 0;
  for (int k = 0; k < n; ++k) { mx += X[k]; my += Y[k]; }
  mx /= n; my /= n;
  double sxx = 0, sxy = 0;
  for (int k = 0; k < n; ++k) { sxx += (X[k] - mx) * (X[k] - mx); sxy += (X[k] - mx) * (Y[k] - my); }
  if (sxx == 0) throw std::invalid_argument("fit_decay: degenerate time window");
  FitResult f;
  f.exponent = sxy / sxx;
  f.n_used = n;
  double ss = 0;
  for (int k = 0; k < n; ++k) {
    double res = Y[k] - my - f.exponent * (X[k] - mx);
    ss += res * res;
  }
  f.stderr_ = (n > 2) ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  return f;
}

uint64_t fnv1a(const void* data, size_t n, uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace gwlab
