#pragma once

#include <cmath>
#include <stdexcept>

namespace gwlab {

// The three weight families, piecewise powers of 1+|q| on either side of the
// light cone:
//   w   = (1+|q|)^{2+2delta}          (q>0),  1+(1+|q|)^{-2mu}     (q<0)
//   w1  = (1+|q|)^{2+2delta-2sigma}   (q>0),  (1+|q|)^{-2sigma}    (q<0)
//   w2  = (1+|q|)^{2+2delta-4sigma}   (q>0),  (1+|q|)^{-1-2sigma}  (q<0)
enum class WeightFamily { w, w1, w2 };

struct WeightSpec {
  double delta = 0.85;
  double sigma = 0.15;
  double mu = 0.25;
  WeightFamily family = WeightFamily::w;

  void validate() const {
    if (!(delta > 0.5 && delta < 1.0)) throw std::invalid_argument("WeightSpec: delta in (1/2,1)");
    if (!(sigma > 0.0 && sigma <= 0.25)) throw std::invalid_argument("WeightSpec: sigma in (0,1/4]");
    if (!(mu > 0.0 && mu <= 0.25)) throw std::invalid_argument("WeightSpec: mu in (0,1/4]");
    if (!(delta - 2.0 * sigma > 0.5)) throw std::invalid_argument("WeightSpec: delta-2sigma > 1/2");
  }

  double value(double q) const {
    double a = 1.0 + std::abs(q);
    switch (family) {
      case WeightFamily::w:
        return q > 0 ? std::pow(a, 2 + 2 * delta) : 1.0 + std::pow(a, -2 * mu);
      case WeightFamily::w1:
        return q > 0 ? std::pow(a, 2 + 2 * delta - 2 * sigma) : std::pow(a, -2 * sigma);
      case WeightFamily::w2:
        return q > 0 ? std::pow(a, 2 + 2 * delta - 4 * sigma) : std::pow(a, -1 - 2 * sigma);
    }
    return 1.0;
  }

  // dw/dq; positive for every family (all are increasing in q):
  // d/dq (1+|q|)^p = p (1+|q|)^{p-1} sign(q)
  double deriv(double q) const {
    double a = 1.0 + std::abs(q);
    double sgn = q > 0 ? 1.0 : -1.0;
    switch (family) {
      case WeightFamily::w:
        return q > 0 ? (2 + 2 * delta) * std::pow(a, 1 + 2 * delta)
                     : sgn * (-2 * mu) * std::pow(a, -2 * mu - 1);
      case WeightFamily::w1:
        return q > 0 ? (2 + 2 * delta - 2 * sigma) * std::pow(a, 1 + 2 * delta - 2 * sigma)
                     : sgn * (-2 * sigma) * std::pow(a, -2 * sigma - 1);
      case WeightFamily::w2:
        return q > 0 ? (2 + 2 * delta - 4 * sigma) * std::pow(a, 1 + 2 * delta - 4 * sigma)
                     : sgn * (-1 - 2 * sigma) * std::pow(a, -2 - 2 * sigma);
    }
    return 0.0;
  }
};

// Hardy weight: (1+|q|)^alpha for q<0, (1+|q|)^beta for q>0 (alpha<1, beta>1)
struct HardyWeight {
  double alpha, beta;
  double value(double q) const {
    double a = 1.0 + std::abs(q);
    return std::pow(a, q < 0 ? alpha : beta);
  }
};

// the paper-style bracket: A^{[x]_+} = A^max(x,0) for x != 0, log A floored
// at 1 when the exponent degenerates to 0
inline double bracket_plus(double A, double x) {
  if (x > 0) return std::pow(A, x);
  if (x < 0) return 1.0;
  return std::max(1.0, std::log(A));
}

}  // namespace gwlab
