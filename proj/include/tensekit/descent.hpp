#pragma once

#include <vector>

#include "tensekit/common.hpp"
#include "tensekit/homotopy.hpp"

namespace tensekit {

// Constraint map g: R^n -> R^m cutting out the variety the descent moves on,
// with the second-order data the closest-point tracker needs.
struct ConstraintMap {
  virtual ~ConstraintMap() = default;
  virtual int n() const = 0;
  virtual int m() const = 0;
  virtual Vec residual(const Vec& x) const = 0;
  virtual Mat jacobian(const Vec& x) const = 0;
  // sum_i mu_i * Hessian(g_i) at x
  virtual Mat hessianContraction(const Vec& x, const Vec& mu) const = 0;
};

struct ObjectiveMap {
  virtual ~ObjectiveMap() = default;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
};

struct DescentSettings {
  double armijoFactor = 1e-4;
  double backtrackRatio = 0.5;
  double initialStep = 1.0;
  double gradTol = 1e-8;  // norm of the projected gradient
  int maxIters = 5000;
};

// Orthogonal projection of v onto ker(jacobian), computed through a thin QR
// of the transpose. Throws RankDeficient when the jacobian loses row rank.
Vec tangent_project(const Mat& jacobian, const Vec& v);

// Euclidean-distance retraction: move from x (on the variety) along a tangent
// step by tracking the closest-point critical system of
//   min_y |y - (x + t step)|^2  s.t. g(y) = 0
// in t from the known solution (x, 0) at t = 0 to t = 1. A zero step returns
// x without tracking.
Vec ed_retract(const ConstraintMap& map, const Vec& x, const Vec& step,
               const TrackerSettings& settings = {});

struct DescentResult {
  Vec x;
  int iterations = 0;
  bool converged = false;
  // per accepted iterate, for monotonicity and drift checks
  std::vector<double> energy, gradNorm, residualNorm;
};

// Projected gradient descent on the variety with Armijo backtracking, steps
// mapped back by ed_retract.
DescentResult minimize(const ConstraintMap& map, const ObjectiveMap& obj,
                       const Vec& x0, const DescentSettings& settings = {},
                       const TrackerSettings& tracker = {});

// Pull a nearby point onto {g = 0} by damped least-norm Gauss-Newton.
Vec project_to_variety(const ConstraintMap& map, const Vec& x0,
                       double tol = 1e-12, int maxIters = 100);

}  // namespace tensekit
