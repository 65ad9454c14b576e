#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>

#include "tensekit/common.hpp"

inline std::string scene_path(const std::string& name) {
  return std::string(TENSEKIT_SCENE_DIR) + "/" + name;
}

// deterministic uniform samples in [lo, hi]
inline double uniform(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline tensekit::Vec random_vec(std::mt19937& rng, int n, double lo = -1.0,
                                double hi = 1.0) {
  tensekit::Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

inline tensekit::Mat random_mat(std::mt19937& rng, int r, int c, double lo = -1.0,
                                double hi = 1.0) {
  tensekit::Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = uniform(rng, lo, hi);
  return m;
}

// random proper rotation via QR of a random matrix
inline tensekit::Mat random_rotation(std::mt19937& rng, int d) {
  tensekit::Mat a = random_mat(rng, d, d);
  Eigen::HouseholderQR<tensekit::Mat> qr(a);
  tensekit::Mat q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

// symmetric interlocked contact configuration on the contact-row zero set:
// side 1 arches in the xz-plane with legs at slope phi, side 2 is its image
// under (x, y, z) -> (y, x, -z). The chord 2 r cos(phi) closes the wrap rows.
// Order: q1..q4 then the mirrored side.
inline std::array<Eigen::Vector3d, 8> hooked_contact(double r, double phi,
                                                     double arm) {
  double u = r * std::cos(phi);
  Eigen::Vector3d q2(-u, 0, r), q3(u, 0, r);
  Eigen::Vector3d leg(arm * std::cos(phi), 0, arm * std::sin(phi));
  Eigen::Vector3d q1 = q2 - leg;
  Eigen::Vector3d q4 = q3 + Eigen::Vector3d(leg[0], 0, -leg[2]);
  auto mirror = [](const Eigen::Vector3d& p) {
    return Eigen::Vector3d(p[1], p[0], -p[2]);
  };
  return {q1, q2, q3, q4, mirror(q1), mirror(q2), mirror(q3), mirror(q4)};
}

#include "tensekit/constraint_system.hpp"

// One interlocked contact with pinned far points: four strand vertices free,
// anchors and lattice pinned. Seeded on the constraint zero set via
// hooked_contact, with taut incoming and internal cables.
struct SingleContact {
  tensekit::PeriodicGraph graph;
  tensekit::Placement placement;
  tensekit::Lattice lattice;
  std::vector<tensekit::TetraContact> contacts;
  std::vector<std::string> pinned;

  tensekit::FrameworkSystem build(std::vector<std::string> extraPinned = {}) const {
    auto allPinned = pinned;
    for (auto& p : extraPinned) allPinned.push_back(p);
    return tensekit::FrameworkSystem(graph, placement, lattice, contacts, {},
                                     allPinned);
  }
};

inline SingleContact single_contact(double r = 0.125, double phi = M_PI / 4,
                                    double arm = 0.4) {
  using namespace tensekit;
  SingleContact sc;
  sc.graph.dim = 3;
  sc.graph.vertexOrbits = {"a1", "u1", "u2", "a2", "b1", "v1", "v2", "b2"};
  IVec zero = IVec::Zero(3);
  auto cable = [&](int i, int j, double rest, double c) {
    sc.graph.edges.push_back({i, j, zero, CableKind{rest, c}});
  };
  cable(0, 1, 0.1, 1.0);  // incoming, anchor to entry
  cable(2, 3, 0.1, 1.0);
  cable(4, 5, 0.1, 1.0);
  cable(6, 7, 0.1, 1.0);
  // internal cross cables between the two strands
  cable(1, 5, 2 * r, 30.0);
  cable(1, 6, 2 * r, 30.0);
  cable(2, 5, 2 * r, 30.0);
  cable(2, 6, 2 * r, 30.0);

  auto pts = hooked_contact(r, phi, arm);
  sc.placement.coords.resize(3, 8);
  for (int i = 0; i < 8; ++i) sc.placement.coords.col(i) = pts[i];
  sc.lattice = Lattice(3, tensekit::Mat::Identity(3, 3));

  TetraContact tc;
  tc.radius = r;
  for (int k = 0; k < 4; ++k) {
    tc.side1[k] = PointRef{k, zero};
    tc.side2[k] = PointRef{4 + k, zero};
  }
  sc.contacts = {tc};

  for (const char* v : {"a1", "a2", "b1", "b2"})
    for (const char* ax : {"x", "y", "z"})
      sc.pinned.push_back("vertex." + std::string(v) + "." + ax);
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j)
      sc.pinned.push_back("lattice." + std::to_string(i) + std::to_string(j));
  return sc;
}
