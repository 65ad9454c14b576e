#include "tensekit/check_gradient.hpp"

#include <cmath>
#include <random>

namespace tensekit {

JacobianCheck check_jacobian(const std::function<Vec(const Vec&)>& f,
                             const Mat& analytic, const Vec& x, double h) {
  JacobianCheck out;
  const int n = static_cast<int>(x.size());
  for (int j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    Vec col = (f(xp) - f(xm)) / (2.0 * h);
    if (col.size() != analytic.rows())
      throw DomainError("analytic Jacobian row count does not match the map");
    for (int i = 0; i < col.size(); ++i) {
      double err = std::abs(analytic(i, j) - col[i]) / (1.0 + std::abs(col[i]));
      if (err > out.maxRelError) {
        out.maxRelError = err;
        out.worstRow = i;
        out.worstCol = j;
      }
    }
  }
  return out;
}

GradientAudit audit_system_gradients(const FrameworkSystem& sys, const Vec& x0,
                                     double tau0, int samples, unsigned rngSeed,
                                     double h, double spread) {
  const int n = sys.n();
  std::mt19937 rng(rngSeed);
  std::uniform_real_distribution<double> unif(-spread, spread);

  GradientAudit out;
  for (int s = 0; s < samples; ++s) {
    Vec x;
    double tau = tau0;
    bool found = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      x = x0;
      for (int k = 0; k < n; ++k) x[k] += unif(rng);
      tau = tau0 + unif(rng);
      if (sys.kink_margin(x, tau) > 10.0 * h) {
        found = true;
        break;
      }
      ++out.resampled;
    }
    if (!found)
      throw NoConvergence("could not sample a point clear of kinks for the audit",
                          tau0);

    Vec z(n + 1);
    z.head(n) = x;
    z[n] = tau;

    Vec g, gTau;
    Mat Dg;
    sys.residual_jacobian(x, tau, g, Dg, gTau);
    Mat fullJac(sys.m(), n + 1);
    fullJac << Dg, gTau;
    auto resMap = [&](const Vec& zz) { return sys.residual(zz.head(n), zz[n]); };
    JacobianCheck res = check_jacobian(resMap, fullJac, z, h);
    out.maxResidualError = std::max(out.maxResidualError, res.maxRelError);

    double q, qTau;
    Vec grad;
    sys.energy_gradient(x, tau, q, grad, qTau);
    Mat engJac(1, n + 1);
    engJac << grad.transpose(), qTau;
    auto engMap = [&](const Vec& zz) {
      Vec v(1);
      v[0] = sys.energy(zz.head(n), zz[n]);
      return v;
    };
    JacobianCheck eng = check_jacobian(engMap, engJac, z, h);
    out.maxEnergyError = std::max(out.maxEnergyError, eng.maxRelError);

    ++out.samples;
  }
  return out;
}

}  // namespace tensekit
