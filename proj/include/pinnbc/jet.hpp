#pragma once

#include <cmath>

namespace pinnbc {

/// Value, gradient and Hessian of a scalar function of (x, y).
/// The mixed partial is stored once, so the Hessian is symmetric by construction.
struct Jet2 {
  double v = 0.0;
  double gx = 0.0;
  double gy = 0.0;
  double hxx = 0.0;
  double hxy = 0.0;
  double hyy = 0.0;

  static constexpr Jet2 constant(double c) { return {c, 0, 0, 0, 0, 0}; }
  static constexpr Jet2 coord_x(double x) { return {x, 1, 0, 0, 0, 0}; }
  static constexpr Jet2 coord_y(double y) { return {y, 0, 1, 0, 0, 0}; }

  double laplacian() const { return hxx + hyy; }

  bool finite() const {
    return std::isfinite(v) && std::isfinite(gx) && std::isfinite(gy) &&
           std::isfinite(hxx) && std::isfinite(hxy) && std::isfinite(hyy);
  }

  Jet2& operator+=(const Jet2& o) {
    v += o.v; gx += o.gx; gy += o.gy;
    hxx += o.hxx; hxy += o.hxy; hyy += o.hyy;
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v; gx -= o.gx; gy -= o.gy;
    hxx -= o.hxx; hxy -= o.hxy; hyy -= o.hyy;
    return *this;
  }
  Jet2& operator*=(double s) {
    v *= s; gx *= s; gy *= s;
    hxx *= s; hxy *= s; hyy *= s;
    return *this;
  }
};

inline Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
inline Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
inline Jet2 operator*(Jet2 a, double s) { return a *= s; }
inline Jet2 operator*(double s, Jet2 a) { return a *= s; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v,
          a.gx * b.v + a.v * b.gx,
          a.gy * b.v + a.v * b.gy,
          a.hxx * b.v + 2.0 * a.gx * b.gx + a.v * b.hxx,
          a.hxy * b.v + a.gx * b.gy + a.gy * b.gx + a.v * b.hxy,
          a.hyy * b.v + 2.0 * a.gy * b.gy + a.v * b.hyy};
}

/// Chain rule for an elementwise scalar map with derivatives d0, d1, d2 at u.v.
inline Jet2 compose(const Jet2& u, double d0, double d1, double d2) {
  return {d0,
          d1 * u.gx,
          d1 * u.gy,
          d2 * u.gx * u.gx + d1 * u.hxx,
          d2 * u.gx * u.gy + d1 * u.hxy,
          d2 * u.gy * u.gy + d1 * u.hyy};
}

inline Jet2 reciprocal(const Jet2& u) {
  const double r = 1.0 / u.v;
  return compose(u, r, -r * r, 2.0 * r * r * r);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }

}  // namespace pinnbc
