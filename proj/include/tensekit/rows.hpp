#pragma once

#include <array>
#include <cmath>

#include "tensekit/autodiff.hpp"
#include "tensekit/common.hpp"

// Scalar-templated evaluators for the residual rows and energy terms. The
// same code runs on plain doubles (values), ad::D1 (Jacobians) and ad::D2
// (Hessian contractions). Points are always 3-vectors; planar frameworks put
// constants in the z component so its derivatives stay zero.
namespace tensekit::rows {

template <class T>
using P3 = std::array<T, 3>;

inline constexpr double kDegenerateNorm = 1e-10;

template <class T>
P3<T> sub(const P3<T>& a, const P3<T>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

template <class T>
T dot(const P3<T>& a, const P3<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class T>
P3<T> cross(const P3<T>& a, const P3<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

template <class T>
T norm(const P3<T>& a) {
  using ad::sqrt;
  return sqrt(dot(a, a));
}

// exact length constraint: |b - a|^2 - len^2
template <class T>
T bar_row(const P3<T>& a, const P3<T>& b, double len) {
  P3<T> d = sub(b, a);
  return dot(d, d) - len * len;
}

// one-sided Hookean energy, (c/2) max(0, |b - a| - rest)^2. Zero slack sits
// on the taut branch so second derivatives there match the stretched side.
template <class T>
T cable_term(const P3<T>& a, const P3<T>& b, double rest, double stiffness) {
  P3<T> d = sub(b, a);
  if (rest == 0.0) {
    // smooth special case, always taut
    return 0.5 * stiffness * dot(d, d);
  }
  T len2 = dot(d, d);
  double lenValue = std::sqrt(ad::value(len2));
  if (lenValue < rest) return T(0.0);
  if (lenValue < kDegenerateNorm)
    throw DegenerateConfiguration("cable endpoints coincide");
  using ad::sqrt;
  T stretch = sqrt(len2) - rest;
  return 0.5 * stiffness * stretch * stretch;
}

// Contact rows for one tetrahedral filament crossing. Eight points: four
// consecutive samples along each of the two filaments, listed in travel
// order (previous exit, entry, exit, next entry). Nine residuals per
// contact, in this order:
//   0  center strut length       |b|^2 - (2r)^2, b joining side midpoints
//   1  side-1 orthogonality      <b, q2 - q3>
//   2  side-2 orthogonality      <b, w2 - w3>
//   3  side-1 lean balance       <b,c1>|c2| - <b,c2>|c1|
//   4  side-2 lean balance
//   5  side-1 planarity          <(q2-q1) x (q4-q3), q3-q2>
//   6  side-2 planarity
//   7  side-1 wrap coupling      <c1,c2> - |c1||c2|(1 - |s|^2 / (2r^2))
//   8  side-2 wrap coupling
// where c1, c2 point into the contact from each end and s spans it.
//
// wrap blends the coupling target between the straightened-strand limit
// (target cosine -1 at wrap 0, which a straight strand satisfies exactly)
// and the full model at wrap 1. Values below 1 exist to continue a
// straightened seed onto the wrapped branch; everything else runs at 1.
template <class T>
std::array<T, 9> tetra_rows(const std::array<P3<T>, 8>& p, double radius,
                            double wrap = 1.0) {
  const P3<T>& q1 = p[0];
  const P3<T>& q2 = p[1];
  const P3<T>& q3 = p[2];
  const P3<T>& q4 = p[3];
  const P3<T>& w1 = p[4];
  const P3<T>& w2 = p[5];
  const P3<T>& w3 = p[6];
  const P3<T>& w4 = p[7];

  P3<T> c1 = sub(q2, q1);
  P3<T> c2 = sub(q3, q4);
  P3<T> d1 = sub(w2, w1);
  P3<T> d2 = sub(w3, w4);
  P3<T> s1 = sub(q3, q2);
  P3<T> s2 = sub(w3, w2);

  T n1sq = dot(c1, c1);
  T n2sq = dot(c2, c2);
  T n3sq = dot(d1, d1);
  T n4sq = dot(d2, d2);
  for (const T* nsq : {&n1sq, &n2sq, &n3sq, &n4sq})
    if (std::sqrt(ad::value(*nsq)) < kDegenerateNorm)
      throw DegenerateConfiguration("contact tuple has coincident consecutive points");
  for (const P3<T>* side : {&s1, &s2})
    if (std::sqrt(ad::value(dot(*side, *side))) < kDegenerateNorm)
      throw DegenerateConfiguration("contact entry and exit coincide");

  using ad::sqrt;
  T n1 = sqrt(n1sq);
  T n2 = sqrt(n2sq);
  T n3 = sqrt(n3sq);
  T n4 = sqrt(n4sq);

  P3<T> b{0.5 * (q2[0] + q3[0]) - 0.5 * (w2[0] + w3[0]),
          0.5 * (q2[1] + q3[1]) - 0.5 * (w2[1] + w3[1]),
          0.5 * (q2[2] + q3[2]) - 0.5 * (w2[2] + w3[2])};

  double r2inv = 1.0 / (2.0 * radius * radius);
  std::array<T, 9> out = {
      dot(b, b) - 4.0 * radius * radius,
      -dot(b, s1),
      -dot(b, s2),
      dot(b, c1) * n2 - dot(b, c2) * n1,
      dot(b, d1) * n4 - dot(b, d2) * n3,
      dot(cross(c1, sub(q4, q3)), s1),
      dot(cross(d1, sub(w4, w3)), s2),
      dot(c1, c2) - n1 * n2 * ((2.0 * wrap - 1.0) - wrap * dot(s1, s1) * r2inv),
      dot(d1, d2) - n3 * n4 * ((2.0 * wrap - 1.0) - wrap * dot(s2, s2) * r2inv),
  };
  return out;
}

}  // namespace tensekit::rows
