#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tensekit/pipeline.hpp"

namespace tensekit {

// Linear map carrying the periodicity lattice at sourceTau onto the lattice
// at targetTau: T * G(source) = G(target), generators in columns.
struct TransferOperator {
  Mat T;
  double sourceTau = 0;
  double targetTau = 0;
};

// Solve T * gSource = gTarget directly. Throws DomainError when either
// generator matrix is singular or the shapes disagree.
TransferOperator transfer_operator(const Mat& gTarget, double targetTau,
                                   const Mat& gSource, double sourceTau);

// Euclidean operator norm: the largest singular value.
double operator_norm(const Mat& T);
inline double operator_norm(const TransferOperator& op) {
  return operator_norm(op.T);
}

// Engineer's-strain Poisson ratio between consecutive steps, reading the
// axial extension from |c11| and the lateral one from the |diagonal| picked
// by lateralAxis (1 = second diagonal, 2 = third). Series has length
// steps - 1. Throws DomainError on fewer than 2 steps, a lateral axis the
// trace does not have, or zero axial strain at some step.
std::vector<double> poisson_ratio(const DeformationTrace& trace,
                                  int lateralAxis);

// Whole-interval variant: strains taken between the first and last step.
double whole_interval_poisson(const DeformationTrace& trace, int lateralAxis);

// Right-hand sides of the three sufficient-condition inequalities as
// functions of the off-diagonal bound alpha. The first numerator crosses
// zero near alpha = 0.183; past that the certificate cannot apply.
std::array<double, 3> certificate_rhs(double alpha);

struct CertificateRecord {
  double tau1 = 0, tau2 = 0;  // tau1 < tau2
  double alpha = 0;           // off-diagonal bound the inequalities used
  std::array<double, 3> margins{};  // rhs - (diagonal ratio)^2 per row
  bool applicable = false;    // all three rhs positive at this alpha
  bool passed = false;        // applicable and all margins >= 0
  double opNorm = 0;          // brute-force check of the conclusion
};

// Evaluate the three inequalities for one lattice pair under a given alpha.
// Never throws on large alpha; the record reports inapplicability instead.
CertificateRecord certify_pair(const Mat& g1, double tau1, const Mat& g2,
                               double tau2, double alpha);

// Fixed-lag certificates across a trace: one record per step pair
// (j, j + lagSteps), all using the single smallest alpha that bounds every
// off-diagonal entry by alpha * |c_ii| at every step of the trace. Throws
// DomainError when the lattices are not lower-triangular, when the trace is
// shorter than the lag, or when the measured alpha lands past the
// applicability knee.
std::vector<CertificateRecord> gershgorin_certificate(
    const DeformationTrace& trace, int lagSteps);

// Analytic hexagonal path: generators (tau, s) and (tau, -s) with
// s = sqrt(2 tau - tau^2), valid for tau in (0.5, 1.5).
Mat honeycomb_lattice(double tau);
// Its transfer operator diag(tau1/tau2, s1/s2).
Mat honeycomb_transfer(double tau1, double tau2);

struct PairNorm {
  double tau1 = 0, tau2 = 0;  // tau1 < tau2
  double norm = 0;
};

struct AnalysisSettings {
  double lag = 3e-3;      // tau distance between operator pairs
  double normTol = 1e-6;  // contraction slack for the verdicts
};

struct AuxeticityReport {
  std::string sceneName;
  std::uint64_t sceneHash = 0;
  int dim = 0;
  double tauStart = 0, tauEnd = 0, step = 0;
  double lag = 0;  // realized lag, lagSteps * step
  int lagSteps = 0;
  double normTol = 0;
  std::vector<double> tau;          // per step
  std::vector<double> lx, ly, lz;   // |diagonal| extensions; lz empty in 2d
  std::vector<double> nuXy, nuXz;   // per interval; nuXz empty in 2d
  std::vector<PairNorm> pairNorms;  // fixed-lag operator norms
  bool certificateApplicable = false;
  std::string certificateNote;  // why the certificate was skipped, if it was
  std::vector<CertificateRecord> certificates;
  bool materialsAuxetic = false;     // every nu <= 0
  bool geometricContraction = false; // every pair norm <= 1 + normTol
  bool certified = false;            // every certificate record passed
};

AuxeticityReport analyze_trace(const DeformationTrace& trace,
                               const AnalysisSettings& settings = {});

nlohmann::json report_json(const AuxeticityReport& report);

}  // namespace tensekit
