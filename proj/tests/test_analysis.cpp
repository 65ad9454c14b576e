#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tensekit/analysis.hpp"
#include "tensekit/pipeline.hpp"
#include "tensekit/scene.hpp"

using namespace tensekit;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// synthetic trace with prescribed lattices; only the fields the analysis
// reads are filled in
DeformationTrace lattice_trace(const std::vector<double>& taus,
                               const std::vector<Mat>& lats) {
  REQUIRE(taus.size() == lats.size());
  int d = static_cast<int>(lats.front().rows());
  DeformationTrace tr;
  tr.meta.sceneName = "synthetic";
  tr.meta.dim = d;
  tr.meta.tauStart = taus.front();
  tr.meta.tauEnd = taus.back();
  tr.meta.step = taus.size() > 1 ? std::abs(taus[1] - taus[0]) : 1.0;
  tr.complete = true;
  for (std::size_t j = 0; j < taus.size(); ++j) {
    TraceStep s;
    s.tau = taus[j];
    s.lattice = lats[j];
    s.coords = Mat::Zero(d, 1);
    s.reducedMinEig = std::numeric_limits<double>::quiet_NaN();
    tr.steps.push_back(std::move(s));
  }
  return tr;
}

DeformationTrace diag_trace(const std::vector<double>& taus,
                            const std::vector<Vec>& diags) {
  std::vector<Mat> lats;
  for (const Vec& dgl : diags) {
    Mat g = Mat::Zero(dgl.size(), dgl.size());
    g.diagonal() = dgl;
    lats.push_back(g);
  }
  return lattice_trace(taus, lats);
}

Mat random_lower(std::mt19937& rng, double offScale) {
  Mat g = Mat::Zero(3, 3);
  for (int i = 0; i < 3; ++i) g(i, i) = uniform(rng, 0.9, 1.7);
  g(1, 0) = uniform(rng, -offScale, offScale);
  g(2, 0) = uniform(rng, -offScale, offScale);
  g(2, 1) = uniform(rng, -offScale, offScale);
  return g;
}

}  // namespace

TEST_CASE("transfer operator matches the analytic hexagonal map") {
  TransferOperator op = transfer_operator(honeycomb_lattice(0.6), 0.6,
                                          honeycomb_lattice(0.8), 0.8);
  CHECK(op.targetTau == 0.6);
  CHECK(op.sourceTau == 0.8);
  REQUIRE(op.T.rows() == 2);
  CHECK(op.T(0, 0) == doctest::Approx(0.75).epsilon(1e-13));
  // sqrt(0.84 / 0.96)
  CHECK(op.T(1, 1) == doctest::Approx(0.9354143466934853).epsilon(1e-13));
  CHECK(std::abs(op.T(0, 1)) < 1e-13);
  CHECK(std::abs(op.T(1, 0)) < 1e-13);
  CHECK((op.T - honeycomb_transfer(0.6, 0.8)).cwiseAbs().maxCoeff() < 1e-13);
  // the map really carries the source generators onto the target ones
  CHECK((op.T * honeycomb_lattice(0.8) - honeycomb_lattice(0.6))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
}

TEST_CASE("transfer operators compose along a parameter path") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    // strictly diagonally dominant, hence invertible
    Mat ga = random_mat(rng, 3, 3, -0.4, 0.4) + 1.3 * Mat::Identity(3, 3);
    Mat gb = random_mat(rng, 3, 3, -0.4, 0.4) + 1.3 * Mat::Identity(3, 3);
    Mat gc = random_mat(rng, 3, 3, -0.4, 0.4) + 1.3 * Mat::Identity(3, 3);
    Mat ab = transfer_operator(ga, 0.1, gb, 0.2).T;
    Mat bc = transfer_operator(gb, 0.2, gc, 0.3).T;
    Mat ac = transfer_operator(ga, 0.1, gc, 0.3).T;
    CHECK((ab * bc - ac).cwiseAbs().maxCoeff() < 1e-10);
    Mat self = transfer_operator(ga, 0.1, ga, 0.1).T;
    CHECK((self - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("triangular transfer entries follow the entry recursion") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Mat g1 = random_lower(rng, 0.2);
    Mat g2 = random_lower(rng, 0.2);
    Mat T = transfer_operator(g1, 1.0, g2, 1.1).T;
    // ratios on the diagonal
    for (int i = 0; i < 3; ++i)
      CHECK(T(i, i) == doctest::Approx(g1(i, i) / g2(i, i)).epsilon(1e-12));
    // the triangle is preserved
    CHECK(std::abs(T(0, 1)) < 1e-12);
    CHECK(std::abs(T(0, 2)) < 1e-12);
    CHECK(std::abs(T(1, 2)) < 1e-12);
    // sub-diagonal entries by back substitution
    double a2 = (g1(1, 0) * g2(1, 1) - g2(1, 0) * g1(1, 1)) /
                (g2(0, 0) * g2(1, 1));
    double a5 = (g1(2, 1) * g2(2, 2) - g2(2, 1) * g1(2, 2)) /
                (g2(1, 1) * g2(2, 2));
    double a3 = (g1(2, 0) * g2(2, 2) - a5 * g2(1, 0) * g2(2, 2) -
                 g2(2, 0) * g1(2, 2)) /
                (g2(0, 0) * g2(2, 2));
    CHECK(T(1, 0) == doctest::Approx(a2).epsilon(1e-10));
    CHECK(T(2, 1) == doctest::Approx(a5).epsilon(1e-10));
    CHECK(T(2, 0) == doctest::Approx(a3).epsilon(1e-10));
  }
}

TEST_CASE("transfer operator rejects degenerate inputs") {
  Mat g = Mat::Identity(3, 3);
  Mat sing = Mat::Zero(3, 3);
  sing(0, 0) = 1;
  sing(1, 1) = 1;
  CHECK_THROWS_AS(transfer_operator(g, 1, sing, 2), DomainError);
  CHECK_THROWS_AS(transfer_operator(sing, 1, g, 2), DomainError);
  CHECK_THROWS_AS(transfer_operator(Mat::Identity(2, 2), 1, g, 2), DomainError);
  CHECK_THROWS_AS(transfer_operator(Mat::Zero(2, 3), 1, Mat::Zero(2, 3), 2),
                  DomainError);
}

TEST_CASE("operator norm is the largest singular value") {
  CHECK(operator_norm(Mat::Identity(3, 3)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 0.75;
  d(1, 1) = -0.3;
  CHECK(operator_norm(d) == doctest::Approx(0.75).epsilon(1e-14));
  // sqrt(0.96 / 0.91), an expanding hexagonal pair
  CHECK(operator_norm(honeycomb_transfer(1.2, 1.3)) ==
        doctest::Approx(1.0271051820261910).epsilon(1e-13));
  std::mt19937 rng(5);
  Mat q = random_rotation(rng, 3);
  CHECK(operator_norm(q) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(operator_norm(2.5 * q) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("hexagonal path lattice and its domain") {
  Mat g = honeycomb_lattice(1.0);
  CHECK(g(0, 0) == 1.0);
  CHECK(g(0, 1) == 1.0);
  CHECK(g(1, 0) == 1.0);
  CHECK(g(1, 1) == -1.0);
  double s = std::sqrt(2 * 0.7 - 0.7 * 0.7);
  g = honeycomb_lattice(0.7);
  CHECK(g(1, 0) == doctest::Approx(s).epsilon(1e-15));
  CHECK(g(1, 1) == doctest::Approx(-s).epsilon(1e-15));
  CHECK_THROWS_AS(honeycomb_lattice(0.5), DomainError);
  CHECK_THROWS_AS(honeycomb_lattice(1.5), DomainError);
  CHECK_THROWS_AS(honeycomb_lattice(-2.0), DomainError);
  CHECK_THROWS_AS(honeycomb_transfer(0.7, 1.5), DomainError);
  // parameters mirrored around 1 share the same lateral length
  CHECK(honeycomb_transfer(0.9, 1.1)(1, 1) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("poisson ratio from engineer strains on a synthetic path") {
  auto tr = diag_trace({1.0, 1.01, 1.02},
                       {vec3(1.0, 1.0, 1.0), vec3(1.1, 0.95, 1.0),
                        vec3(1.21, 0.9025, 1.0)});
  auto nu = poisson_ratio(tr, 1);
  REQUIRE(nu.size() == 2);
  CHECK(nu[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(nu[1] == doctest::Approx(0.5).epsilon(1e-12));
  auto nuz = poisson_ratio(tr, 2);
  CHECK(nuz[0] == 0.0);
  CHECK(nuz[1] == 0.0);
  // only the lengths matter, not the orientation of a generator
  auto flipped = diag_trace({1.0, 1.01, 1.02},
                            {vec3(1.0, -1.0, 1.0), vec3(1.1, -0.95, 1.0),
                             vec3(1.21, -0.9025, 1.0)});
  CHECK(poisson_ratio(flipped, 1)[0] == doctest::Approx(nu[0]).epsilon(1e-15));
}

TEST_CASE("poisson ratio input validation") {
  auto one = diag_trace({1.0}, {vec3(1, 1, 1)});
  CHECK_THROWS_AS(poisson_ratio(one, 1), DomainError);
  CHECK_THROWS_AS(whole_interval_poisson(one, 1), DomainError);
  auto tr = diag_trace({1.0, 1.01}, {vec3(1, 1, 1), vec3(1.1, 1, 1)});
  CHECK_THROWS_AS(poisson_ratio(tr, 0), DomainError);
  CHECK_THROWS_AS(poisson_ratio(tr, 3), DomainError);
  auto flat = diag_trace({1.0, 1.01, 1.02},
                         {vec3(1, 1, 1), vec3(1, 0.9, 1), vec3(1.1, 0.8, 1)});
  CHECK_THROWS_AS(poisson_ratio(flat, 1), DomainError);
  // a planar trace has a single lateral axis
  auto flatland = diag_trace({1.0, 1.01}, {vec2(1, 1), vec2(1.1, 1)});
  CHECK_THROWS_AS(poisson_ratio(flatland, 2), DomainError);
  CHECK(poisson_ratio(flatland, 1)[0] == 0.0);
}

TEST_CASE("whole interval poisson ratio reads the endpoints alone") {
  // deliberately wiggly interior
  auto tr = diag_trace({1.0, 1.1, 1.2, 1.3},
                       {vec3(0.93, 0.89, 0.89), vec3(1.2, 0.91, 1.0),
                        vec3(1.1, 1.02, 0.9), vec3(1.52, 1.04, 1.04)});
  double ex = 1.52 / 0.93 - 1.0;
  double ey = 1.04 / 0.89 - 1.0;
  CHECK(ex == doctest::Approx(0.6344086021505376).epsilon(1e-14));
  CHECK(ey == doctest::Approx(0.16853932584269662).epsilon(1e-14));
  double nu = whole_interval_poisson(tr, 1);
  CHECK(nu == doctest::Approx(-ey / ex).epsilon(1e-15));
  CHECK(nu == doctest::Approx(-0.26566368310797943).epsilon(1e-13));
  CHECK(std::abs(nu + 0.27) <= 0.01);
  CHECK(whole_interval_poisson(tr, 2) == doctest::Approx(nu).epsilon(1e-13));
}

TEST_CASE("certificate right-hand sides") {
  auto r0 = certificate_rhs(0.0);
  CHECK(r0[0] == 1.0);
  CHECK(r0[1] == 1.0);
  CHECK(r0[2] == 1.0);
  auto r = certificate_rhs(1e-4);
  CHECK(r[0] == doctest::Approx(0.9996998699940022).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(0.9995999600040004).epsilon(1e-14));
  CHECK(r[2] == doctest::Approx(0.9996000599920010).epsilon(1e-14));
  // strictly decreasing while applicable
  auto prev = r0;
  for (double a = 0.01; a < 0.175; a += 0.01) {
    auto cur = certificate_rhs(a);
    for (int i = 0; i < 3; ++i) CHECK(cur[i] < prev[i]);
    prev = cur;
  }
  auto edge = certificate_rhs(0.18);
  CHECK(edge[0] > 0);
  CHECK(edge[1] > 0);
  CHECK(edge[2] > 0);
  // the first inequality gives out just past 0.1835
  CHECK(certificate_rhs(0.184)[0] < 0);
  CHECK_THROWS_AS(certificate_rhs(-1e-12), DomainError);
}

TEST_CASE("pairwise contraction certificate on diagonal lattices") {
  Mat g2 = Mat::Identity(3, 3);
  Mat g1 = Mat::Zero(3, 3);
  g1(0, 0) = 0.9;
  g1(1, 1) = 0.95;
  g1(2, 2) = 0.98;
  CertificateRecord rec = certify_pair(g1, 0.9, g2, 1.0, 0.0);
  CHECK(rec.tau1 == 0.9);
  CHECK(rec.tau2 == 1.0);
  CHECK(rec.alpha == 0.0);
  CHECK(rec.applicable);
  CHECK(rec.passed);
  CHECK(rec.margins[0] == doctest::Approx(1 - 0.81).epsilon(1e-14));
  CHECK(rec.margins[1] == doctest::Approx(1 - 0.9025).epsilon(1e-14));
  CHECK(rec.margins[2] == doctest::Approx(1 - 0.9604).epsilon(1e-14));
  CHECK(rec.opNorm == doctest::Approx(0.98).epsilon(1e-13));

  g1(0, 0) = 1.01;  // growth along the first generator
  rec = certify_pair(g1, 0.9, g2, 1.0, 0.0);
  CHECK(rec.applicable);
  CHECK_FALSE(rec.passed);
  CHECK(rec.margins[0] < 0);
  CHECK(rec.opNorm == doctest::Approx(1.01).epsilon(1e-13));

  rec = certify_pair(g1, 0.9, g2, 1.0, 0.2);  // bound past the knee
  CHECK_FALSE(rec.applicable);
  CHECK_FALSE(rec.passed);

  // planar pair: the absent third row holds vacuously
  Mat h2 = Mat::Identity(2, 2);
  Mat h1 = 0.9 * Mat::Identity(2, 2);
  rec = certify_pair(h1, 0.9, h2, 1.0, 0.0);
  CHECK(rec.passed);
  CHECK(rec.margins[2] == certificate_rhs(0.0)[2]);
}

TEST_CASE("certificate soundness over random hypothesis-satisfying pairs") {
  std::mt19937 rng(2024);
  int passes = 0, fails = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    double alpha = uniform(rng, 0.0, 0.1);
    Mat g2 = Mat::Zero(3, 3);
    Mat g1 = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i) g2(i, i) = uniform(rng, 0.8, 1.6);
    for (int i = 0; i < 3; ++i) g1(i, i) = g2(i, i) * uniform(rng, 0.7, 1.05);
    // every off-diagonal entry within alpha of the smallest diagonal, so
    // the hypothesis holds against every diagonal entry of its own matrix
    double b2 = alpha * g2.diagonal().cwiseAbs().minCoeff();
    double b1 = alpha * g1.diagonal().cwiseAbs().minCoeff();
    g2(1, 0) = uniform(rng, -b2, b2);
    g2(2, 0) = uniform(rng, -b2, b2);
    g2(2, 1) = uniform(rng, -b2, b2);
    g1(1, 0) = uniform(rng, -b1, b1);
    g1(2, 0) = uniform(rng, -b1, b1);
    g1(2, 1) = uniform(rng, -b1, b1);
    CertificateRecord rec = certify_pair(g1, 1.0, g2, 1.1, alpha);
    CAPTURE(trial);
    CAPTURE(alpha);
    REQUIRE(rec.applicable);
    if (rec.passed) {
      ++passes;
      REQUIRE(rec.opNorm <= 1.0 + 1e-12);
    } else {
      ++fails;
    }
  }
  // the sampler genuinely exercises both branches
  CHECK(passes >= 100);
  CHECK(fails >= 10);
}

TEST_CASE("fixed lag certificates across a synthetic trace") {
  std::vector<double> taus;
  std::vector<Vec> diags;
  for (int j = 0; j <= 5; ++j) {
    double t = 1.0 + 0.01 * j;
    taus.push_back(t);
    diags.push_back(vec3(t, 1.0 + 0.5 * (t - 1.0), 1.0 + 0.25 * (t - 1.0)));
  }
  auto tr = diag_trace(taus, diags);
  auto recs = gershgorin_certificate(tr, 2);
  REQUIRE(recs.size() == 4);
  for (std::size_t j = 0; j < recs.size(); ++j) {
    const CertificateRecord& r = recs[j];
    CHECK(r.tau1 == doctest::Approx(taus[j]).epsilon(1e-15));
    CHECK(r.tau2 == doctest::Approx(taus[j + 2]).epsilon(1e-15));
    CHECK(r.alpha == 0.0);
    CHECK(r.applicable);
    CHECK(r.passed);
    double worst = 0;
    for (int i = 0; i < 3; ++i)
      worst = std::max(worst, diags[j][i] / diags[j + 2][i]);
    CHECK(r.opNorm == doctest::Approx(worst).epsilon(1e-13));
  }
  // direction of travel changes the order of the records, nothing else
  std::vector<double> rt(taus.rbegin(), taus.rend());
  std::vector<Vec> rd(diags.rbegin(), diags.rend());
  auto back = gershgorin_certificate(diag_trace(rt, rd), 2);
  REQUIRE(back.size() == recs.size());
  for (std::size_t j = 0; j < recs.size(); ++j) {
    const CertificateRecord& r = back[recs.size() - 1 - j];
    CHECK(r.tau1 == doctest::Approx(recs[j].tau1).epsilon(1e-15));
    CHECK(r.tau2 == doctest::Approx(recs[j].tau2).epsilon(1e-15));
    CHECK(r.passed);
  }
}

TEST_CASE("certificate applicability checks on traces") {
  auto tr = diag_trace({1.0, 1.01, 1.02},
                       {vec3(1, 1, 1), vec3(1.01, 1, 1), vec3(1.02, 1, 1)});
  CHECK_THROWS_AS(gershgorin_certificate(tr, 0), DomainError);
  CHECK_THROWS_AS(gershgorin_certificate(tr, 3), DomainError);
  CHECK(gershgorin_certificate(tr, 2).size() == 1);

  // hexagonal generators carry an upper off-diagonal entry
  auto hex = lattice_trace({0.8, 0.85},
                           {honeycomb_lattice(0.8), honeycomb_lattice(0.85)});
  CHECK_THROWS_AS(gershgorin_certificate(hex, 1), DomainError);

  // off-diagonal bound past the knee
  Mat wide = Mat::Identity(3, 3);
  wide(1, 0) = 0.25;
  CHECK_THROWS_AS(
      gershgorin_certificate(lattice_trace({1.0, 1.01}, {wide, wide}), 1),
      DomainError);

  Mat degenerate = Mat::Identity(3, 3);
  degenerate(2, 2) = 0;
  CHECK_THROWS_AS(
      gershgorin_certificate(
          lattice_trace({1.0, 1.01}, {Mat::Identity(3, 3), degenerate}), 1),
      DomainError);
}

TEST_CASE("trace analysis verdicts and the report document") {
  std::vector<double> taus;
  std::vector<Vec> diags;
  for (int j = 0; j <= 5; ++j) {
    double t = 1.0 + 0.01 * j;
    taus.push_back(t);
    diags.push_back(vec3(t, 1.0 + 0.5 * (t - 1.0), 1.0 + 0.25 * (t - 1.0)));
  }
  auto tr = diag_trace(taus, diags);
  tr.meta.sceneName = "growth";
  tr.meta.sceneHash = 0xabcdefULL;
  AnalysisSettings st;
  st.lag = 0.02;
  st.normTol = 1e-6;
  AuxeticityReport rep = analyze_trace(tr, st);
  CHECK(rep.sceneName == "growth");
  CHECK(rep.dim == 3);
  CHECK(rep.lagSteps == 2);
  CHECK(rep.lag == doctest::Approx(0.02).epsilon(1e-14));
  REQUIRE(rep.tau.size() == 6);
  CHECK(rep.lx[3] == doctest::Approx(diags[3][0]).epsilon(1e-15));
  CHECK(rep.ly[3] == doctest::Approx(diags[3][1]).epsilon(1e-15));
  CHECK(rep.lz[3] == doctest::Approx(diags[3][2]).epsilon(1e-15));
  REQUIRE(rep.nuXy.size() == 5);
  REQUIRE(rep.nuXz.size() == 5);
  for (double v : rep.nuXy) CHECK(v < 0);
  for (double v : rep.nuXz) CHECK(v < 0);
  REQUIRE(rep.pairNorms.size() == 4);
  for (const PairNorm& p : rep.pairNorms) CHECK(p.norm < 1);
  CHECK(rep.certificateApplicable);
  CHECK(rep.certificates.size() == 4);
  CHECK(rep.materialsAuxetic);
  CHECK(rep.geometricContraction);
  CHECK(rep.certified);

  nlohmann::json doc = report_json(rep);
  CHECK(doc["schema"] == "tensekit-report/1");
  CHECK(doc["scene"] == "growth");
  CHECK(doc["scene_hash"] == "0000000000abcdef");
  CHECK(doc["steps"] == 6);
  CHECK(doc["lag_steps"] == 2);
  CHECK(doc["verdicts"]["materials_auxetic"].get<bool>());
  CHECK(doc["verdicts"]["geometric_contraction"].get<bool>());
  CHECK(doc["verdicts"]["certified"].get<bool>());
  CHECK(doc["certificate"]["applicable"].get<bool>());
  CHECK(doc["certificate"].count("note") == 0);

  // every verdict can be recomputed from the stored arrays
  bool materials = true;
  for (double v : doc["poisson"]["xy"].get<std::vector<double>>())
    materials = materials && v <= 0;
  for (double v : doc["poisson"]["xz"].get<std::vector<double>>())
    materials = materials && v <= 0;
  CHECK(materials == doc["verdicts"]["materials_auxetic"].get<bool>());
  bool contraction = true;
  for (const auto& p : doc["operator_norms"])
    contraction = contraction &&
                  p["norm"].get<double>() <= 1 + doc["norm_tolerance"].get<double>();
  CHECK(contraction == doc["verdicts"]["geometric_contraction"].get<bool>());
  bool certified = doc["certificate"]["applicable"].get<bool>() &&
                   !doc["certificate"]["pairs"].empty();
  for (const auto& p : doc["certificate"]["pairs"])
    certified = certified && p["passed"].get<bool>();
  CHECK(certified == doc["verdicts"]["certified"].get<bool>());
  CHECK(doc["whole_interval"]["extension_x"].get<double>() ==
        doctest::Approx(diags.back()[0] / diags.front()[0] - 1).epsilon(1e-14));
}

TEST_CASE("trace analysis flags an expanding lateral response") {
  std::vector<double> taus;
  std::vector<Vec> diags;
  for (int j = 0; j <= 4; ++j) {
    double t = 1.0 + 0.01 * j;
    taus.push_back(t);
    diags.push_back(vec3(t, 1.0 - 0.4 * (t - 1.0), 1.0 + 0.1 * (t - 1.0)));
  }
  AnalysisSettings st;
  st.lag = 0.01;
  AuxeticityReport rep = analyze_trace(diag_trace(taus, diags), st);
  CHECK(rep.lagSteps == 1);
  for (double v : rep.nuXy) CHECK(v > 0);
  for (double v : rep.nuXz) CHECK(v < 0);
  CHECK_FALSE(rep.materialsAuxetic);
  // the shrinking axis expands under the backwards map
  CHECK_FALSE(rep.geometricContraction);
  CHECK(rep.certificateApplicable);
  CHECK_FALSE(rep.certified);
  for (const CertificateRecord& r : rep.certificates) {
    CHECK_FALSE(r.passed);
    CHECK(r.margins[1] < 0);
  }
}

TEST_CASE("hexagonal uphill branch is auxetic and contracting but uncertified") {
  std::vector<double> taus;
  std::vector<Mat> lats;
  for (int j = 0; j <= 8; ++j) {
    double t = 0.55 + 0.05 * j;
    taus.push_back(t);
    lats.push_back(honeycomb_lattice(t));
  }
  auto tr = lattice_trace(taus, lats);
  AnalysisSettings st;
  st.lag = 0.05;
  AuxeticityReport rep = analyze_trace(tr, st);
  CHECK(rep.dim == 2);
  CHECK(rep.lz.empty());
  CHECK(rep.nuXz.empty());
  for (double v : rep.nuXy) CHECK(v <= 1e-9);
  for (const PairNorm& p : rep.pairNorms) CHECK(p.norm <= 1 + 1e-12);
  // contraction also shows up one level below the ratios: the lateral
  // lengths themselves never shrink along the stretch
  for (std::size_t j = 1; j < rep.ly.size(); ++j)
    CHECK(rep.ly[j] >= rep.ly[j - 1] - 1e-12);
  CHECK(rep.materialsAuxetic);
  CHECK(rep.geometricContraction);
  CHECK_FALSE(rep.certificateApplicable);
  CHECK_FALSE(rep.certified);
  CHECK(rep.certificateNote.find("lower-triangular") != std::string::npos);
  nlohmann::json doc = report_json(rep);
  CHECK_FALSE(doc["certificate"]["applicable"].get<bool>());
  CHECK(doc["certificate"].count("note") == 1);
  CHECK(doc["poisson"].count("xz") == 0);
  CHECK(doc["extensions"].count("z") == 0);
}

TEST_CASE("poisson sign and pairwise contraction agree on diagonal paths") {
  std::mt19937 rng(78);
  int auxetic = 0, conventional = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> taus;
    std::vector<Vec> diags;
    Vec cur = vec3(1.0, 1.0, 1.0);
    double t = 1.0;
    for (int j = 0; j < 4; ++j) {
      taus.push_back(t);
      diags.push_back(cur);
      t += 0.01;
      // decisively signed lateral increments keep the comparison away
      // from the knife edge at zero strain; biased toward growth so both
      // verdicts show up often enough
      auto signedStep = [&]() {
        double mag = uniform(rng, 1e-3, 0.05);
        return uniform(rng, 0.0, 1.0) < 0.15 ? -mag : mag;
      };
      cur = vec3(cur[0] * (1.0 + uniform(rng, 1e-3, 0.05)),
                 cur[1] * (1.0 + signedStep()), cur[2] * (1.0 + signedStep()));
    }
    auto tr = diag_trace(taus, diags);
    auto nu1 = poisson_ratio(tr, 1);
    auto nu2 = poisson_ratio(tr, 2);
    bool allNonpositive = true;
    for (double v : nu1) allNonpositive = allNonpositive && v <= 0;
    for (double v : nu2) allNonpositive = allNonpositive && v <= 0;
    bool allContract = true;
    for (std::size_t j = 0; j + 1 < taus.size(); ++j) {
      double norm = operator_norm(transfer_operator(tr.steps[j].lattice,
                                                    taus[j],
                                                    tr.steps[j + 1].lattice,
                                                    taus[j + 1])
                                      .T);
      allContract = allContract && norm <= 1.0 + 1e-12;
    }
    CAPTURE(trial);
    CHECK(allNonpositive == allContract);
    (allNonpositive ? auxetic : conventional)++;
  }
  CHECK(auxetic > 10);
  CHECK(conventional > 10);
}

TEST_CASE("monotone growth contracts over every pair of parameters") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> taus;
    std::vector<Vec> diags;
    Vec cur = vec3(uniform(rng, 0.8, 1.2), uniform(rng, 0.8, 1.2),
                   uniform(rng, 0.8, 1.2));
    double t = 1.0;
    for (int j = 0; j < 6; ++j) {
      taus.push_back(t);
      diags.push_back(cur);
      t += 0.01;
      cur = vec3(cur[0] * (1.0 + uniform(rng, 1e-4, 0.05)),
                 cur[1] * (1.0 + uniform(rng, 0.0, 0.05)),
                 cur[2] * (1.0 + uniform(rng, 0.0, 0.05)));
    }
    auto tr = diag_trace(taus, diags);
    for (double v : poisson_ratio(tr, 1)) CHECK(v <= 1e-9);
    for (double v : poisson_ratio(tr, 2)) CHECK(v <= 1e-9);
    for (std::size_t a = 0; a < taus.size(); ++a)
      for (std::size_t b = a + 1; b < taus.size(); ++b) {
        double norm = operator_norm(transfer_operator(tr.steps[a].lattice,
                                                      taus[a],
                                                      tr.steps[b].lattice,
                                                      taus[b])
                                        .T);
        CHECK(norm <= 1.0 + 1e-12);
      }
  }
}

TEST_CASE("trace analysis input validation") {
  auto one = diag_trace({1.0}, {vec3(1, 1, 1)});
  CHECK_THROWS_AS(analyze_trace(one), DomainError);
  auto tr = diag_trace({1.0, 1.01, 1.02},
                       {vec3(1, 1, 1), vec3(1.01, 1, 1), vec3(1.02, 1, 1)});
  AnalysisSettings bad;
  bad.lag = 0.0;
  CHECK_THROWS_AS(analyze_trace(tr, bad), DomainError);
  AnalysisSettings wide;
  wide.lag = 0.05;  // five grid steps on a three step trace
  CHECK_THROWS_AS(analyze_trace(tr, wide), DomainError);
  auto noStep = tr;
  noStep.meta.step = 0.0;
  CHECK_THROWS_AS(analyze_trace(noStep), DomainError);
}

TEST_CASE("analysis of a tracked interlock deformation") {
  Scene scene = parse_scene(scene_path("clasp.json"));
  FrameworkSystem sys = build_system(scene);
  Equilibrium eq = equilibrate(sys, sys.seed_state(), scene.initialTau(),
                               scene.descent, scene.tracker);
  DeformationTrace tr = deform(sys, eq, scene.initialTau() + 0.02, 0.01,
                               scene.tracker);
  REQUIRE(tr.complete);
  tr.meta.sceneName = scene.name;
  tr.meta.sceneHash = scene.hash;
  AnalysisSettings st;
  st.lag = 0.01;
  AuxeticityReport rep = analyze_trace(tr, st);
  CHECK(rep.lagSteps == 1);
  // the first generator stretches while the others hold their length
  for (double v : rep.nuXy) CHECK(v == 0.0);
  for (double v : rep.nuXz) CHECK(v == 0.0);
  for (const PairNorm& p : rep.pairNorms)
    CHECK(p.norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.certificateApplicable);
  for (const CertificateRecord& r : rep.certificates) {
    CHECK(r.alpha == 0.0);
    CHECK(r.passed);
  }
  CHECK(rep.materialsAuxetic);
  CHECK(rep.geometricContraction);
  CHECK(rep.certified);
}
