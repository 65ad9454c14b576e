#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "tensekit/common.hpp"

// Forward-mode scalars carrying dense derivatives over the local slots of one
// residual row or energy term. Rows gather at most kMaxLocals slots (8 points
// of a tetrahedron plus the full lattice stay under it), so fixed-size
// derivative storage suffices and evaluation never allocates.
namespace tensekit::ad {

inline constexpr int kMaxLocals = 40;
using GradVec = Eigen::Matrix<double, kMaxLocals, 1>;
using HessMat = Eigen::Matrix<double, kMaxLocals, kMaxLocals>;

// value plus gradient
struct D1 {
  double v = 0.0;
  GradVec g = GradVec::Zero();

  D1() = default;
  D1(double c) : v(c) {}
  static D1 seed(double value, int slot) {
    D1 x(value);
    x.g[slot] = 1.0;
    return x;
  }
};

// value, gradient, and Hessian
struct D2 {
  double v = 0.0;
  GradVec g = GradVec::Zero();
  HessMat h = HessMat::Zero();

  D2() = default;
  D2(double c) : v(c) {}
  static D2 seed(double value, int slot) {
    D2 x(value);
    x.g[slot] = 1.0;
    return x;
  }
};

// branching helper shared with plain doubles
inline double value(double x) { return x; }
inline double value(const D1& x) { return x.v; }
inline double value(const D2& x) { return x.v; }

inline D1 operator+(const D1& a, const D1& b) {
  D1 r(a.v + b.v);
  r.g = a.g + b.g;
  return r;
}
inline D1 operator-(const D1& a, const D1& b) {
  D1 r(a.v - b.v);
  r.g = a.g - b.g;
  return r;
}
inline D1 operator-(const D1& a) {
  D1 r(-a.v);
  r.g = -a.g;
  return r;
}
inline D1 operator*(const D1& a, const D1& b) {
  D1 r(a.v * b.v);
  r.g = a.g * b.v + b.g * a.v;
  return r;
}
inline D1 operator/(const D1& a, const D1& b) {
  D1 r(a.v / b.v);
  r.g = (a.g - r.v * b.g) / b.v;
  return r;
}
inline D1 operator+(const D1& a, double c) {
  D1 r(a.v + c);
  r.g = a.g;
  return r;
}
inline D1 operator+(double c, const D1& a) { return a + c; }
inline D1 operator-(const D1& a, double c) { return a + (-c); }
inline D1 operator-(double c, const D1& a) {
  D1 r(c - a.v);
  r.g = -a.g;
  return r;
}
inline D1 operator*(const D1& a, double c) {
  D1 r(a.v * c);
  r.g = a.g * c;
  return r;
}
inline D1 operator*(double c, const D1& a) { return a * c; }
inline D1 operator/(const D1& a, double c) { return a * (1.0 / c); }
inline D1 sqrt(const D1& a) {
  D1 r(std::sqrt(a.v));
  r.g = a.g / (2.0 * r.v);
  return r;
}

inline D2 operator+(const D2& a, const D2& b) {
  D2 r(a.v + b.v);
  r.g = a.g + b.g;
  r.h = a.h + b.h;
  return r;
}
inline D2 operator-(const D2& a, const D2& b) {
  D2 r(a.v - b.v);
  r.g = a.g - b.g;
  r.h = a.h - b.h;
  return r;
}
inline D2 operator-(const D2& a) {
  D2 r(-a.v);
  r.g = -a.g;
  r.h = -a.h;
  return r;
}
inline D2 operator*(const D2& a, const D2& b) {
  D2 r(a.v * b.v);
  r.g = a.g * b.v + b.g * a.v;
  r.h = a.h * b.v + b.h * a.v + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}
inline D2 operator/(const D2& a, const D2& b) {
  D2 r(a.v / b.v);
  r.g = (a.g - r.v * b.g) / b.v;
  r.h = (a.h - r.v * b.h - r.g * b.g.transpose() - b.g * r.g.transpose()) / b.v;
  return r;
}
inline D2 operator+(const D2& a, double c) {
  D2 r = a;
  r.v += c;
  return r;
}
inline D2 operator+(double c, const D2& a) { return a + c; }
inline D2 operator-(const D2& a, double c) { return a + (-c); }
inline D2 operator-(double c, const D2& a) {
  D2 r = -a;
  r.v += c;
  return r;
}
inline D2 operator*(const D2& a, double c) {
  D2 r(a.v * c);
  r.g = a.g * c;
  r.h = a.h * c;
  return r;
}
inline D2 operator*(double c, const D2& a) { return a * c; }
inline D2 operator/(const D2& a, double c) { return a * (1.0 / c); }
inline D2 sqrt(const D2& a) {
  D2 r(std::sqrt(a.v));
  r.g = a.g / (2.0 * r.v);
  r.h = (a.h * 0.5 - r.g * r.g.transpose()) / r.v;
  return r;
}

using std::sqrt;  // so generic code can call sqrt on plain doubles too

}  // namespace tensekit::ad
