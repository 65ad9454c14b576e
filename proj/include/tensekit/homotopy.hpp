#pragma once

#include <functional>
#include <vector>

#include "tensekit/common.hpp"

namespace tensekit {

// Square parametrized system H(x, t) = 0 with exact derivatives.
struct Homotopy {
  int size = 0;
  std::function<Vec(const Vec&, double)> H;
  std::function<Mat(const Vec&, double)> dHdx;
  std::function<Vec(const Vec&, double)> dHdt;
};

struct TrackerSettings {
  double newtonTol = 1e-10;      // accepted residual norm at grid points
  int maxNewtonIters = 20;
  int maxSubdivisions = 12;      // bisection depth before giving up on a step
  double conditionLimit = 1e12;  // abort when the Jacobian gets worse
};

// Follow the solution x(t) of H(x, t) = 0 from a known start across a
// strictly monotone grid (either direction): Euler predictor along the
// implicit derivative, Newton corrector at the new grid point, recursive
// step bisection when the corrector fails. Returns one solution per grid
// point, the start included.
std::vector<Vec> track(const Homotopy& h, const Vec& x0,
                       const std::vector<double>& grid,
                       const TrackerSettings& settings = {});

}  // namespace tensekit
