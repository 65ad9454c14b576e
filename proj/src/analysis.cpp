#include "tensekit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace tensekit {

namespace {

void require_square(const Mat& g, const char* which) {
  if (g.rows() != g.cols() || g.rows() < 1)
    throw DomainError(std::string(which) + " generator matrix is not square");
}

// extension along diagonal slot i of a stored lattice matrix
double extension(const Mat& lattice, int i) {
  return std::abs(lattice(i, i));
}

double checked_ratio(double num, double den, const char* what) {
  if (den == 0.0) throw DomainError(std::string("zero ") + what);
  return num / den;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

TransferOperator transfer_operator(const Mat& gTarget, double targetTau,
                                   const Mat& gSource, double sourceTau) {
  require_square(gTarget, "target");
  require_square(gSource, "source");
  if (gTarget.rows() != gSource.rows())
    throw DomainError("generator matrices have different dimensions");
  Eigen::FullPivLU<Mat> lu(gSource.transpose());
  if (!lu.isInvertible())
    throw DomainError("source generator matrix is singular");
  if (!Eigen::FullPivLU<Mat>(gTarget).isInvertible())
    throw DomainError("target generator matrix is singular");
  TransferOperator op;
  // T * gSource = gTarget  <=>  gSource^T * T^T = gTarget^T
  op.T = lu.solve(gTarget.transpose()).transpose();
  op.sourceTau = sourceTau;
  op.targetTau = targetTau;
  return op;
}

double operator_norm(const Mat& T) {
  return Eigen::JacobiSVD<Mat>(T).singularValues()[0];
}

std::vector<double> poisson_ratio(const DeformationTrace& trace,
                                  int lateralAxis) {
  const auto& steps = trace.steps;
  if (steps.size() < 2)
    throw DomainError("poisson ratio needs at least 2 trace steps");
  int d = trace.meta.dim;
  if (lateralAxis < 1 || lateralAxis >= d)
    throw DomainError("lateral axis " + std::to_string(lateralAxis) +
                      " out of range for dimension " + std::to_string(d));
  std::vector<double> nu;
  nu.reserve(steps.size() - 1);
  for (std::size_t j = 1; j < steps.size(); ++j) {
    double ax0 = extension(steps[j - 1].lattice, 0);
    double ax1 = extension(steps[j].lattice, 0);
    double lat0 = extension(steps[j - 1].lattice, lateralAxis);
    double lat1 = extension(steps[j].lattice, lateralAxis);
    double ex = checked_ratio(ax1 - ax0, ax0, "axial extension");
    if (ex == 0.0)
      throw DomainError("zero axial strain at tau " +
                        format_double(steps[j].tau));
    double ey = checked_ratio(lat1 - lat0, lat0, "lateral extension");
    nu.push_back(-ey / ex);
  }
  return nu;
}

double whole_interval_poisson(const DeformationTrace& trace, int lateralAxis) {
  const auto& steps = trace.steps;
  if (steps.size() < 2)
    throw DomainError("poisson ratio needs at least 2 trace steps");
  int d = trace.meta.dim;
  if (lateralAxis < 1 || lateralAxis >= d)
    throw DomainError("lateral axis " + std::to_string(lateralAxis) +
                      " out of range for dimension " + std::to_string(d));
  double ax0 = extension(steps.front().lattice, 0);
  double ax1 = extension(steps.back().lattice, 0);
  double lat0 = extension(steps.front().lattice, lateralAxis);
  double lat1 = extension(steps.back().lattice, lateralAxis);
  double ex = checked_ratio(ax1 - ax0, ax0, "axial extension");
  if (ex == 0.0) throw DomainError("zero axial strain over the interval");
  double ey = checked_ratio(lat1 - lat0, lat0, "lateral extension");
  return -ey / ex;
}

std::array<double, 3> certificate_rhs(double alpha) {
  if (alpha < 0) throw DomainError("negative off-diagonal bound");
  double a = alpha, a2 = a * a, a3 = a2 * a, a4 = a2 * a2;
  return {(1 - 3 * a - 11 * a2 - 12 * a3 - 4 * a4) / (1 + 2 * a2),
          (1 - 3 * a - 7 * a2 - 3 * a3) / (1 + a + a2 + a3),
          (1 - 2 * a - a2) / (1 + 2 * a + a2)};
}

CertificateRecord certify_pair(const Mat& g1, double tau1, const Mat& g2,
                               double tau2, double alpha) {
  require_square(g1, "first");
  require_square(g2, "second");
  if (g1.rows() != g2.rows())
    throw DomainError("generator matrices have different dimensions");
  CertificateRecord rec;
  rec.tau1 = tau1;
  rec.tau2 = tau2;
  rec.alpha = alpha;
  std::array<double, 3> rhs = certificate_rhs(alpha);
  rec.applicable = rhs[0] > 0 && rhs[1] > 0 && rhs[2] > 0;
  int d = static_cast<int>(g1.rows());
  bool holds = true;
  for (int i = 0; i < 3; ++i) {
    if (i >= d) {
      rec.margins[i] = rhs[i];  // absent rows hold vacuously
      continue;
    }
    double r = checked_ratio(g1(i, i), g2(i, i), "diagonal lattice entry");
    rec.margins[i] = rhs[i] - r * r;
    if (rec.margins[i] < 0) holds = false;
  }
  rec.passed = rec.applicable && holds;
  rec.opNorm = operator_norm(transfer_operator(g1, tau1, g2, tau2).T);
  return rec;
}

std::vector<CertificateRecord> gershgorin_certificate(
    const DeformationTrace& trace, int lagSteps) {
  const auto& steps = trace.steps;
  if (lagSteps < 1) throw DomainError("certificate lag must be at least 1 step");
  if (steps.size() < static_cast<std::size_t>(lagSteps) + 1)
    throw DomainError("trace shorter than the certificate lag");
  int d = trace.meta.dim;

  // single alpha over the whole discretization, as the hypothesis demands
  double alpha = 0;
  for (const TraceStep& s : steps) {
    double minDiag = std::numeric_limits<double>::infinity();
    double maxOff = 0, maxUpper = 0;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        double v = std::abs(s.lattice(r, c));
        if (r == c)
          minDiag = std::min(minDiag, v);
        else if (r > c)
          maxOff = std::max(maxOff, v);
        else
          maxUpper = std::max(maxUpper, v);
      }
    if (maxUpper > 1e-9 * std::max(1.0, minDiag))
      throw DomainError("lattice at tau " + format_double(s.tau) +
                        " is not lower-triangular");
    if (minDiag == 0.0)
      throw DomainError("zero diagonal lattice entry at tau " +
                        format_double(s.tau));
    alpha = std::max(alpha, std::max(maxOff, maxUpper) / minDiag);
  }
  std::array<double, 3> rhs = certificate_rhs(alpha);
  if (!(rhs[0] > 0 && rhs[1] > 0 && rhs[2] > 0))
    throw DomainError("off-diagonal bound " + format_double(alpha) +
                      " is past the applicability knee near 0.183");

  std::vector<CertificateRecord> out;
  for (std::size_t j = 0; j + lagSteps < steps.size(); ++j) {
    const TraceStep& a = steps[j];
    const TraceStep& b = steps[j + lagSteps];
    const TraceStep& lo = a.tau < b.tau ? a : b;
    const TraceStep& hi = a.tau < b.tau ? b : a;
    out.push_back(
        certify_pair(lo.lattice, lo.tau, hi.lattice, hi.tau, alpha));
  }
  return out;
}

Mat honeycomb_lattice(double tau) {
  if (!(tau > 0.5 && tau < 1.5))
    throw DomainError("hexagonal path parameter " + format_double(tau) +
                      " outside (0.5, 1.5)");
  double s = std::sqrt(2 * tau - tau * tau);
  Mat g(2, 2);
  g << tau, tau, s, -s;
  return g;
}

Mat honeycomb_transfer(double tau1, double tau2) {
  honeycomb_lattice(tau1);  // domain checks
  honeycomb_lattice(tau2);
  Mat T = Mat::Zero(2, 2);
  T(0, 0) = tau1 / tau2;
  T(1, 1) = std::sqrt((2 * tau1 - tau1 * tau1) / (2 * tau2 - tau2 * tau2));
  return T;
}

AuxeticityReport analyze_trace(const DeformationTrace& trace,
                               const AnalysisSettings& settings) {
  const auto& steps = trace.steps;
  if (steps.size() < 2)
    throw DomainError("analysis needs at least 2 trace steps");
  if (!(settings.lag > 0)) throw DomainError("lag must be positive");
  if (!(trace.meta.step > 0)) throw DomainError("trace has no step size");

  AuxeticityReport rep;
  rep.sceneName = trace.meta.sceneName;
  rep.sceneHash = trace.meta.sceneHash;
  rep.dim = trace.meta.dim;
  rep.tauStart = trace.meta.tauStart;
  rep.tauEnd = trace.meta.tauEnd;
  rep.step = trace.meta.step;
  rep.lagSteps = std::max(
      1, static_cast<int>(std::lround(settings.lag / trace.meta.step)));
  rep.lag = rep.lagSteps * trace.meta.step;
  rep.normTol = settings.normTol;
  if (steps.size() < static_cast<std::size_t>(rep.lagSteps) + 1)
    throw DomainError("trace shorter than the operator lag");

  for (const TraceStep& s : steps) {
    rep.tau.push_back(s.tau);
    rep.lx.push_back(extension(s.lattice, 0));
    rep.ly.push_back(extension(s.lattice, 1));
    if (rep.dim >= 3) rep.lz.push_back(extension(s.lattice, 2));
  }
  rep.nuXy = poisson_ratio(trace, 1);
  if (rep.dim >= 3) rep.nuXz = poisson_ratio(trace, 2);

  for (std::size_t j = 0; j + rep.lagSteps < steps.size(); ++j) {
    const TraceStep& a = steps[j];
    const TraceStep& b = steps[j + rep.lagSteps];
    const TraceStep& lo = a.tau < b.tau ? a : b;
    const TraceStep& hi = a.tau < b.tau ? b : a;
    PairNorm pn;
    pn.tau1 = lo.tau;
    pn.tau2 = hi.tau;
    pn.norm =
        operator_norm(transfer_operator(lo.lattice, lo.tau, hi.lattice, hi.tau).T);
    rep.pairNorms.push_back(pn);
  }

  try {
    rep.certificates = gershgorin_certificate(trace, rep.lagSteps);
    rep.certificateApplicable = true;
  } catch (const DomainError& e) {
    rep.certificateApplicable = false;
    rep.certificateNote = e.what();
  }

  auto nonpositive = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x <= 0; });
  };
  rep.materialsAuxetic = nonpositive(rep.nuXy) && nonpositive(rep.nuXz);
  rep.geometricContraction =
      std::all_of(rep.pairNorms.begin(), rep.pairNorms.end(),
                  [&](const PairNorm& p) { return p.norm <= 1 + rep.normTol; });
  rep.certified =
      rep.certificateApplicable && !rep.certificates.empty() &&
      std::all_of(rep.certificates.begin(), rep.certificates.end(),
                  [](const CertificateRecord& r) { return r.passed; });
  return rep;
}

nlohmann::json report_json(const AuxeticityReport& rep) {
  using nlohmann::json;
  json ext{{"x", rep.lx}, {"y", rep.ly}};
  if (rep.dim >= 3) ext["z"] = rep.lz;
  json nu{{"xy", rep.nuXy}};
  if (rep.dim >= 3) nu["xz"] = rep.nuXz;

  json norms = json::array();
  for (const PairNorm& p : rep.pairNorms)
    norms.push_back({{"tau1", p.tau1}, {"tau2", p.tau2}, {"norm", p.norm}});

  json cert{{"applicable", rep.certificateApplicable}};
  if (!rep.certificateApplicable) cert["note"] = rep.certificateNote;
  json pairs = json::array();
  for (const CertificateRecord& r : rep.certificates)
    pairs.push_back({{"tau1", r.tau1},
                     {"tau2", r.tau2},
                     {"alpha", r.alpha},
                     {"margins", r.margins},
                     {"passed", r.passed},
                     {"op_norm", r.opNorm}});
  cert["pairs"] = pairs;

  json whole{{"extension_x", rep.lx.back() / rep.lx.front() - 1},
             {"extension_y", rep.ly.back() / rep.ly.front() - 1}};
  if (rep.dim >= 3) whole["extension_z"] = rep.lz.back() / rep.lz.front() - 1;
  double exWhole = rep.lx.back() / rep.lx.front() - 1;
  if (exWhole != 0) {
    whole["nu_xy"] = -(rep.ly.back() / rep.ly.front() - 1) / exWhole;
    if (rep.dim >= 3)
      whole["nu_xz"] = -(rep.lz.back() / rep.lz.front() - 1) / exWhole;
  }

  return json{{"schema", "tensekit-report/1"},
              {"scene", rep.sceneName},
              {"scene_hash", hash_hex(rep.sceneHash)},
              {"dim", rep.dim},
              {"tau_start", rep.tauStart},
              {"tau_end", rep.tauEnd},
              {"step", rep.step},
              {"lag", rep.lag},
              {"lag_steps", rep.lagSteps},
              {"norm_tolerance", rep.normTol},
              {"steps", rep.tau.size()},
              {"tau", rep.tau},
              {"extensions", ext},
              {"poisson", nu},
              {"whole_interval", whole},
              {"operator_norms", norms},
              {"certificate", cert},
              {"verdicts",
               {{"materials_auxetic", rep.materialsAuxetic},
                {"geometric_contraction", rep.geometricContraction},
                {"certified", rep.certified}}}};
}

}  // namespace tensekit
