#pragma once

#include <array>
#include <cmath>

namespace gwlab {

// forward-mode dual number carrying derivatives along three directions
// (here: d/ds, d/dq, d/dtheta)
struct D3 {
  double v = 0;
  std::array<double, 3> d{0, 0, 0};

  D3() = default;
  D3(double val) : v(val) {}
  D3(double val, double ds, double dq, double dth) : v(val), d{ds, dq, dth} {}

  D3 operator-() const { return {-v, -d[0], -d[1], -d[2]}; }
};

inline D3 operator+(const D3& a, const D3& b) {
  return {a.v + b.v, a.d[0] + b.d[0], a.d[1] + b.d[1], a.d[2] + b.d[2]};
}
inline D3 operator-(const D3& a, const D3& b) {
  return {a.v - b.v, a.d[0] - b.d[0], a.d[1] - b.d[1], a.d[2] - b.d[2]};
}
inline D3 operator*(const D3& a, const D3& b) {
  return {a.v * b.v, a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1],
          a.d[2] * b.v + a.v * b.d[2]};
}
inline D3 operator/(const D3& a, const D3& b) {
  double inv = 1.0 / b.v;
  double q = a.v * inv;
  return {q, (a.d[0] - q * b.d[0]) * inv, (a.d[1] - q * b.d[1]) * inv,
          (a.d[2] - q * b.d[2]) * inv};
}
inline D3 operator+(double a, const D3& b) { return D3(a) + b; }
inline D3 operator-(double a, const D3& b) { return D3(a) - b; }
inline D3 operator*(double a, const D3& b) { return D3(a) * b; }
inline D3 operator/(double a, const D3& b) { return D3(a) / b; }
inline D3 operator+(const D3& a, double b) { return a + D3(b); }
inline D3 operator-(const D3& a, double b) { return a - D3(b); }
inline D3 operator*(const D3& a, double b) { return a * D3(b); }
inline D3 operator/(const D3& a, double b) { return a / D3(b); }

inline D3 sin(const D3& a) {
  double c = std::cos(a.v), s = std::sin(a.v);
  return {s, c * a.d[0], c * a.d[1], c * a.d[2]};
}
inline D3 cos(const D3& a) {
  double c = std::cos(a.v), s = std::sin(a.v);
  return {c, -s * a.d[0], -s * a.d[1], -s * a.d[2]};
}

}  // namespace gwlab
