#pragma once

#include <functional>

#include "tensekit/common.hpp"
#include "tensekit/constraint_system.hpp"

namespace tensekit {

struct JacobianCheck {
  double maxRelError = 0.0;
  int worstRow = -1;
  int worstCol = -1;
};

// Central finite differences against an analytic Jacobian. Error per entry is
// |analytic - numeric| / (1 + |numeric|); the largest one is reported.
JacobianCheck check_jacobian(const std::function<Vec(const Vec&)>& f,
                             const Mat& analytic, const Vec& x, double h = 1e-6);

struct GradientAudit {
  int samples = 0;
  int resampled = 0;  // draws rejected for sitting too close to a kink
  double maxResidualError = 0.0;
  double maxEnergyError = 0.0;
};

// Derivative audit of one assembled system: random points in a box of the
// given spread around (x0, tau0), skipping draws whose kink margin is below
// 10h so the difference quotients never straddle a branch. Checks the
// residual Jacobian [Dg | g_tau] and the energy gradient [grad Q | Q_tau].
GradientAudit audit_system_gradients(const FrameworkSystem& sys, const Vec& x0,
                                     double tau0, int samples, unsigned rngSeed,
                                     double h = 1e-6, double spread = 1e-2);

}  // namespace tensekit
