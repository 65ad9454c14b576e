#include "tensekit/homotopy.hpp"

#include <cmath>
#include <limits>

namespace tensekit {

namespace {

// reciprocal condition estimate from the LU factors, cheap and rough
double lu_rcond(const Eigen::PartialPivLU<Mat>& lu, const Mat& a) {
  double anorm = a.cwiseAbs().rowwise().sum().maxCoeff();
  if (anorm == 0) return 0;
  // one inverse-norm probe: solve against the all-ones vector
  Vec probe = Vec::Ones(a.rows());
  Vec sol = lu.solve(probe);
  double invnorm = sol.cwiseAbs().maxCoeff();
  if (!std::isfinite(invnorm) || invnorm == 0) return 0;
  return 1.0 / (anorm * invnorm);
}

struct Corrector {
  Vec x;
  bool ok = false;
};

// Newton iteration at fixed t. Not ok when the residual grows three times in
// a row or the iteration budget runs out before reaching the tolerance.
Corrector correct(const Homotopy& h, Vec x, double t, const TrackerSettings& s) {
  Corrector out;
  double best = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 0; it < s.maxNewtonIters; ++it) {
    Vec r = h.H(x, t);
    double rn = r.norm();
    if (!std::isfinite(rn)) return out;
    if (rn <= s.newtonTol) {
      out.x = x;
      out.ok = true;
      return out;
    }
    if (rn >= best) {
      if (++growth >= 3) return out;  // diverging
    } else {
      growth = 0;
      best = rn;
    }
    Mat j = h.dHdx(x, t);
    Eigen::PartialPivLU<Mat> lu(j);
    double rc = lu_rcond(lu, j);
    if (rc == 0 || 1.0 / rc > s.conditionLimit)
      throw SingularJacobian("corrector Jacobian is numerically singular", t);
    x -= lu.solve(r);
  }
  Vec r = h.H(x, t);
  if (std::isfinite(r.norm()) && r.norm() <= s.newtonTol) {
    out.x = x;
    out.ok = true;
  }
  return out;
}

// one predictor-corrector move from (x, t0) to t1, bisecting on failure
Vec advance(const Homotopy& h, const Vec& x, double t0, double t1,
            const TrackerSettings& s, int depth) {
  Mat j = h.dHdx(x, t0);
  Eigen::PartialPivLU<Mat> lu(j);
  double rc = lu_rcond(lu, j);
  if (rc == 0 || 1.0 / rc > s.conditionLimit)
    throw SingularJacobian("predictor Jacobian is numerically singular", t0);
  Vec predicted = x - lu.solve(h.dHdt(x, t0) * (t1 - t0));

  Corrector c = correct(h, predicted, t1, s);
  if (c.ok) return c.x;
  if (depth >= s.maxSubdivisions)
    throw NoConvergence("path tracking stalled after repeated bisection", t1);
  double mid = 0.5 * (t0 + t1);
  Vec xm = advance(h, x, t0, mid, s, depth + 1);
  return advance(h, xm, mid, t1, s, depth + 1);
}

}  // namespace

std::vector<Vec> track(const Homotopy& h, const Vec& x0,
                       const std::vector<double>& grid,
                       const TrackerSettings& s) {
  if (h.size <= 0 || !h.H || !h.dHdx || !h.dHdt)
    throw DomainError("homotopy is not fully specified");
  if (x0.size() != h.size) throw DomainError("start point has wrong dimension");
  if (grid.size() < 1) throw DomainError("tracking grid is empty");
  for (size_t k = 1; k < grid.size(); ++k) {
    double step = grid[k] - grid[k - 1];
    double first = grid[1] - grid[0];
    if (step == 0 || (step > 0) != (first > 0))
      throw DomainError("tracking grid must be strictly monotone");
  }

  double startRes = h.H(x0, grid.front()).norm();
  if (!(startRes <= s.newtonTol))
    throw DomainError("start point does not satisfy the system at the first grid value");

  std::vector<Vec> path;
  path.reserve(grid.size());
  path.push_back(x0);
  for (size_t k = 1; k < grid.size(); ++k)
    path.push_back(advance(h, path.back(), grid[k - 1], grid[k], s, 0));
  return path;
}

}  // namespace tensekit
