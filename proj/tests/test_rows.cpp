#include <array>
#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tensekit/rows.hpp"

using namespace tensekit;
using Eigen::Vector3d;
using ad::D1;
using ad::D2;

namespace {

template <class T>
rows::P3<T> p3(const Vector3d& p) {
  return {T(p[0]), T(p[1]), T(p[2])};
}

// seeded copy: slot of point i, axis k is 3*i + k
template <class T>
std::array<rows::P3<T>, 8> seed_points(const std::array<Vector3d, 8>& pts) {
  std::array<rows::P3<T>, 8> out;
  for (int i = 0; i < 8; ++i)
    for (int k = 0; k < 3; ++k) out[i][k] = T::seed(pts[i][k], 3 * i + k);
  return out;
}

std::array<rows::P3<double>, 8> plain_points(const std::array<Vector3d, 8>& pts) {
  std::array<rows::P3<double>, 8> out;
  for (int i = 0; i < 8; ++i) out[i] = p3<double>(pts[i]);
  return out;
}

// the same nine residuals written directly in Eigen, as an independent check
// on the templated evaluation path
std::array<double, 9> tetra_oracle(const std::array<Vector3d, 8>& p, double r) {
  Vector3d q1 = p[0], q2 = p[1], q3 = p[2], q4 = p[3];
  Vector3d w1 = p[4], w2 = p[5], w3 = p[6], w4 = p[7];
  Vector3d c1 = q2 - q1, c2 = q3 - q4, d1 = w2 - w1, d2 = w3 - w4;
  Vector3d s1 = q3 - q2, s2 = w3 - w2;
  Vector3d b = 0.5 * (q2 + q3) - 0.5 * (w2 + w3);
  return {
      b.squaredNorm() - 4 * r * r,
      b.dot(q2 - q3),
      b.dot(w2 - w3),
      b.dot(c1) * c2.norm() - b.dot(c2) * c1.norm(),
      b.dot(d1) * d2.norm() - b.dot(d2) * d1.norm(),
      c1.cross(q4 - q3).dot(q3 - q2),
      d1.cross(w4 - w3).dot(w3 - w2),
      c1.dot(c2) - c1.norm() * c2.norm() * (1 - s1.squaredNorm() / (2 * r * r)),
      d1.dot(d2) - d1.norm() * d2.norm() * (1 - s2.squaredNorm() / (2 * r * r)),
  };
}

// straight filaments crossing at right angles, touching at distance 2r:
// both tuples collinear with entry and exit a chord of length 2r apart
std::array<Vector3d, 8> straight_contact(double r) {
  return {Vector3d(-1, 0, r),  Vector3d(-r, 0, r),  Vector3d(r, 0, r),
          Vector3d(1, 0, r),   Vector3d(0, -1, -r), Vector3d(0, -r, -r),
          Vector3d(0, r, -r),  Vector3d(0, 1, -r)};
}

}  // namespace

TEST_CASE("bar row measures squared length error") {
  auto a = p3<double>({0, 0, 0});
  CHECK(rows::bar_row(a, p3<double>({1, 0, 0}), 1.0) == doctest::Approx(0.0));
  CHECK(rows::bar_row(a, p3<double>({2, 0, 0}), 1.0) == doctest::Approx(3.0));
  CHECK(rows::bar_row(a, p3<double>({3, 4, 0}), 5.0) == doctest::Approx(0.0));
  CHECK(rows::bar_row(a, p3<double>({1, 1, 1}), 2.0) == doctest::Approx(-1.0));
}

TEST_CASE("cable term is one-sided Hookean") {
  auto a = p3<double>({0, 0, 0});
  // slack
  CHECK(rows::cable_term(a, p3<double>({0.05, 0, 0}), 0.1, 1.0) == 0.0);
  // stretch 1.0 at unit stiffness
  CHECK(rows::cable_term(a, p3<double>({1.1, 0, 0}), 0.1, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
  // stretch 0.2 at stiffness 30
  CHECK(rows::cable_term(a, p3<double>({0.45, 0, 0}), 0.25, 30.0) ==
        doctest::Approx(0.6).epsilon(1e-14));
  // zero rest length is smooth quadratic
  CHECK(rows::cable_term(a, p3<double>({0.3, 0, 0}), 0.0, 2.0) ==
        doctest::Approx(0.09).epsilon(1e-14));

  SUBCASE("continuity across the kink") {
    double below = rows::cable_term(a, p3<double>({1 - 1e-9, 0, 0}), 1.0, 1.0);
    double above = rows::cable_term(a, p3<double>({1 + 1e-9, 0, 0}), 1.0, 1.0);
    CHECK(below == 0.0);
    CHECK(above == doctest::Approx(0.0).epsilon(1e-17));
  }

  SUBCASE("taut branch exactly at zero stretch") {
    // value and gradient vanish, curvature is the stretched-side rank-one form
    auto sa = std::array<rows::P3<D2>, 2>{};
    Vector3d pa(0, 0, 0), pb(1, 0, 0);
    for (int k = 0; k < 3; ++k) {
      sa[0][k] = D2::seed(pa[k], k);
      sa[1][k] = D2::seed(pb[k], 3 + k);
    }
    D2 e = rows::cable_term(sa[0], sa[1], 1.0, 2.0);
    CHECK(e.v == 0.0);
    CHECK(e.g.head(6).norm() == doctest::Approx(0.0).epsilon(1e-14));
    // H = c * J^T dhat dhat^T J with dhat = (1,0,0), J = [-I | I]
    CHECK(e.h(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(e.h(3, 3) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(e.h(0, 3) == doctest::Approx(-2.0).epsilon(1e-13));
    CHECK(e.h(1, 1) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(e.h(2, 5) == doctest::Approx(0.0).epsilon(1e-13));
  }
}

TEST_CASE("straight right-angle crossing satisfies every contact row") {
  double r = 0.125;
  auto rowsOut = rows::tetra_rows(plain_points(straight_contact(r)), r);
  for (double v : rowsOut) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("arched contact family stays on the zero set") {
  double r = 0.125;
  for (double phi : {0.3, 0.5, M_PI / 4, 1.0, 1.3})
    for (double arm : {0.2, 0.4, 0.8}) {
      CAPTURE(phi);
      CAPTURE(arm);
      auto rowsOut = rows::tetra_rows(plain_points(hooked_contact(r, phi, arm)), r);
      for (double v : rowsOut) CHECK(v == doctest::Approx(0.0).epsilon(1e-13));
    }
}

TEST_CASE("contact rows match a direct transcription at random points") {
  std::mt19937 rng(2024);
  int done = 0;
  while (done < 20) {
    std::array<Vector3d, 8> pts;
    for (auto& p : pts)
      p = Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    // keep clear of the degeneracy guards
    bool ok = true;
    for (auto [a, b] : std::array<std::pair<int, int>, 6>{
             {{0, 1}, {3, 2}, {1, 2}, {4, 5}, {7, 6}, {5, 6}}})
      ok = ok && (pts[b] - pts[a]).norm() > 1e-2;
    if (!ok) continue;
    ++done;
    double r = uniform(rng, 0.05, 0.3);
    auto got = rows::tetra_rows(plain_points(pts), r);
    auto want = tetra_oracle(pts, r);
    for (int k = 0; k < 9; ++k) {
      CAPTURE(k);
      CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("contact rows are invariant under rigid motions") {
  std::mt19937 rng(99);
  double r = 0.125;
  auto pts = hooked_contact(r, 0.8, 0.35);
  // perturb off the zero set so the invariance is tested at generic values
  for (auto& p : pts) p += Vector3d(uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05));
  auto base = rows::tetra_rows(plain_points(pts), r);
  for (int trial = 0; trial < 5; ++trial) {
    Mat rot = random_rotation(rng, 3);
    Vector3d shift(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2));
    std::array<Vector3d, 8> moved;
    for (int i = 0; i < 8; ++i) moved[i] = rot * pts[i] + shift;
    auto got = rows::tetra_rows(plain_points(moved), r);
    for (int k = 0; k < 9; ++k)
      CHECK(got[k] == doctest::Approx(base[k]).epsilon(1e-10));
  }
}

TEST_CASE("reversing a tuple keeps the zero set") {
  double r = 0.125;
  auto pts = hooked_contact(r, 0.7, 0.5);
  std::array<Vector3d, 8> rev = {pts[3], pts[2], pts[1], pts[0],
                                 pts[7], pts[6], pts[5], pts[4]};
  auto rowsOut = rows::tetra_rows(plain_points(rev), r);
  for (double v : rowsOut) CHECK(v == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("degenerate tuples are rejected") {
  double r = 0.125;
  auto pts = straight_contact(r);
  SUBCASE("coincident consecutive points") {
    pts[0] = pts[1];
    CHECK_THROWS_AS(rows::tetra_rows(plain_points(pts), r), DegenerateConfiguration);
  }
  SUBCASE("entry equals exit") {
    pts[2] = pts[1];
    CHECK_THROWS_AS(rows::tetra_rows(plain_points(pts), r), DegenerateConfiguration);
  }
  SUBCASE("second side collapses") {
    pts[6] = pts[5];
    CHECK_THROWS_AS(rows::tetra_rows(plain_points(pts), r), DegenerateConfiguration);
  }
}

TEST_CASE("contact row derivatives agree with central differences") {
  std::mt19937 rng(5150);
  double r = 0.125;
  auto base = hooked_contact(r, 0.9, 0.4);
  for (auto& p : base)
    p += Vector3d(uniform(rng, -0.03, 0.03), uniform(rng, -0.03, 0.03),
                  uniform(rng, -0.03, 0.03));
  const double h = 1e-6;

  auto rowsAt = [&](const std::array<Vector3d, 8>& pts) {
    return rows::tetra_rows(plain_points(pts), r);
  };
  auto d1 = rows::tetra_rows(seed_points<D1>(base), r);
  auto d2 = rows::tetra_rows(seed_points<D2>(base), r);

  for (int slot = 0; slot < 24; ++slot) {
    auto pp = base, pm = base;
    pp[slot / 3][slot % 3] += h;
    pm[slot / 3][slot % 3] -= h;
    auto fp = rowsAt(pp), fm = rowsAt(pm);
    auto gp = rows::tetra_rows(seed_points<D1>(pp), r);
    auto gm = rows::tetra_rows(seed_points<D1>(pm), r);
    for (int k = 0; k < 9; ++k) {
      double fd = (fp[k] - fm[k]) / (2 * h);
      CHECK(std::abs(d1[k].g[slot] - fd) / (1 + std::abs(fd)) < 1e-7);
      CHECK(d2[k].g[slot] == doctest::Approx(d1[k].g[slot]).epsilon(1e-13));
      for (int slot2 = 0; slot2 < 24; ++slot2) {
        double hfd = (gp[k].g[slot2] - gm[k].g[slot2]) / (2 * h);
        CHECK(std::abs(d2[k].h(slot2, slot) - hfd) / (1 + std::abs(hfd)) < 5e-6);
      }
    }
  }
}
