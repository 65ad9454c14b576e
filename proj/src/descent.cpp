#include "tensekit/descent.hpp"

#include <cmath>

namespace tensekit {

Vec tangent_project(const Mat& jacobian, const Vec& v) {
  if (jacobian.cols() != v.size())
    throw DomainError("vector length does not match the Jacobian");
  const int m = static_cast<int>(jacobian.rows());
  const int n = static_cast<int>(jacobian.cols());
  if (m == 0) return v;
  if (m > n) throw RankDeficient("more constraint rows than coordinates");
  Eigen::ColPivHouseholderQR<Mat> qr(jacobian.transpose());
  if (qr.rank() < m)
    throw RankDeficient("constraint Jacobian lost row rank");
  // orthonormal basis of the row space; remove that component
  Mat q1 = qr.householderQ() * Mat::Identity(n, m);
  return v - q1 * (q1.transpose() * v);
}

Vec ed_retract(const ConstraintMap& map, const Vec& x, const Vec& step,
               const TrackerSettings& settings) {
  const int n = map.n();
  const int m = map.m();
  if (x.size() != n || step.size() != n)
    throw DomainError("point or step has wrong dimension");
  if (step.isZero(0.0)) return x;

  // critical-point system of min_y |y - (x + t step)|^2 s.t. g(y) = 0,
  // unknowns z = (y, mu)
  Homotopy h;
  h.size = n + m;
  h.H = [&](const Vec& z, double t) {
    Vec y = z.head(n);
    Vec F(n + m);
    F.head(n) = 2.0 * (y - x - t * step) + map.jacobian(y).transpose() * z.tail(m);
    F.tail(m) = map.residual(y);
    return F;
  };
  h.dHdx = [&](const Vec& z, double) {
    Vec y = z.head(n);
    Mat Dg = map.jacobian(y);
    Mat J = Mat::Zero(n + m, n + m);
    J.topLeftCorner(n, n) =
        2.0 * Mat::Identity(n, n) + map.hessianContraction(y, z.tail(m));
    J.topRightCorner(n, m) = Dg.transpose();
    J.bottomLeftCorner(m, n) = Dg;
    return J;
  };
  h.dHdt = [&](const Vec&, double) {
    Vec v = Vec::Zero(n + m);
    v.head(n) = -2.0 * step;
    return v;
  };

  Vec z0 = Vec::Zero(n + m);
  z0.head(n) = x;
  auto path = track(h, z0, {0.0, 1.0}, settings);
  return path.back().head(n);
}

Vec project_to_variety(const ConstraintMap& map, const Vec& x0, double tol,
                       int maxIters) {
  Vec x = x0;
  for (int it = 0; it < maxIters; ++it) {
    Vec g = map.residual(x);
    double gn = g.norm();
    if (gn <= tol) return x;
    Mat Dg = map.jacobian(x);
    // least-norm Gauss-Newton step, tolerant of rank loss
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(Dg);
    Vec d = cod.solve(-g);
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-14) {
      Vec cand = x + alpha * d;
      if (map.residual(cand).norm() <= gn * (1.0 - 1e-4 * alpha)) {
        x = cand;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw MaxIterations("projection onto the constraint set stalled");
  }
  throw MaxIterations("projection onto the constraint set did not converge");
}

DescentResult minimize(const ConstraintMap& map, const ObjectiveMap& obj,
                       const Vec& x0, const DescentSettings& settings,
                       const TrackerSettings& tracker) {
  if (!(settings.armijoFactor > 0 && settings.armijoFactor < 1) ||
      !(settings.backtrackRatio > 0 && settings.backtrackRatio < 1) ||
      settings.initialStep <= 0)
    throw DomainError("descent settings out of range");
  if (x0.size() != map.n()) throw DomainError("start point has wrong dimension");

  Vec x = x0;
  double startRes = map.residual(x).norm();
  if (startRes > 1e-8)
    throw DomainError("start point is too far from the constraint set");
  if (startRes > 0.5 * tracker.newtonTol) x = project_to_variety(map, x);

  DescentResult res;
  for (int it = 0; it < settings.maxIters; ++it) {
    ++res.iterations;
    Mat Dg = map.jacobian(x);
    Vec pg = tangent_project(Dg, obj.gradient(x));
    double q = obj.value(x);
    res.energy.push_back(q);
    res.gradNorm.push_back(pg.norm());
    res.residualNorm.push_back(map.residual(x).norm());
    if (pg.norm() <= settings.gradTol) {
      res.converged = true;
      res.x = x;
      return res;
    }

    double alpha = settings.initialStep;
    double slope = pg.squaredNorm();  // <grad Q, pg> for a projection
    bool accepted = false;
    while (alpha > 1e-14) {
      bool probeOk = true;
      Vec cand;
      try {
        cand = ed_retract(map, x, -alpha * pg, tracker);
      } catch (const SingularJacobian&) {
        probeOk = false;  // step left the smooth regime, try shorter
      } catch (const NoConvergence&) {
        probeOk = false;
      }
      if (probeOk && obj.value(cand) <= q - settings.armijoFactor * alpha * slope) {
        x = cand;
        accepted = true;
        break;
      }
      alpha *= settings.backtrackRatio;
    }
    if (!accepted)
      throw NoConvergence("backtracking line search could not accept a step",
                          alpha);
  }
  throw MaxIterations("descent iteration budget exhausted");
}

}  // namespace tensekit
