#include "tensekit/lattice.hpp"

#include <cmath>

namespace tensekit {

Lattice::Lattice(int d, Mat g) : dim(d), generators(std::move(g)) {
  if (d != 2 && d != 3) throw DomainError("lattice dimension must be 2 or 3");
  if (generators.rows() != d || generators.cols() != d)
    throw DomainError("generator matrix must be d x d");
}

double Lattice::entry(int i, int j) const {
  if (i < 0 || i >= dim || j < 0 || j >= dim)
    throw DomainError("lattice entry index out of range");
  return generators(i, j);
}

GaugeFixResult gauge_fix(const Lattice& lat) {
  const int d = lat.dim;
  const Mat& G = lat.generators;

  // Rank check via column-pivoted QR before committing to the plain QR below.
  Eigen::ColPivHouseholderQR<Mat> rankQr(G);
  rankQr.setThreshold(1e-12);
  if (rankQr.rank() < d) throw RankDeficient("generator matrix is rank deficient");

  // We need R G = L with R orthogonal and L lower triangular. Flipping both
  // index orders turns the problem into an ordinary QR factorization:
  // with J the antidiagonal permutation, J G J = Q U gives
  // G = (J Q J)(J U J), and J U J is lower triangular.
  Mat J = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) J(i, d - 1 - i) = 1.0;

  Eigen::HouseholderQR<Mat> qr(J * G * J);
  Mat Q = qr.householderQ();
  Mat U = qr.matrixQR().triangularView<Eigen::Upper>();

  Mat R = J * Q.transpose() * J;
  Mat L = J * U * J;

  // Make the diagonal positive; each flip negates a row of both factors.
  for (int i = 0; i < d; ++i) {
    if (L(i, i) < 0) {
      L.row(i) = -L.row(i);
      R.row(i) = -R.row(i);
    }
  }
  // Keep the rotation proper. When det(G) < 0 this leaves the last diagonal
  // entry of L negative, which is the only consistent choice.
  if (R.determinant() < 0) {
    L.row(d - 1) = -L.row(d - 1);
    R.row(d - 1) = -R.row(d - 1);
  }
  // zero out the numerically tiny upper triangle left by the factorization
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) L(i, j) = 0.0;

  return {Lattice(d, L), R};
}

}  // namespace tensekit
