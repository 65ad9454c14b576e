#pragma once

#include "tensekit/common.hpp"

namespace tensekit {

// Translation lattice of a d-periodic framework. The generator vectors are
// the COLUMNS of `generators`, so a lift vector m in Z^d realizes the
// translation generators * m. Scene files serialize the matrix row-major.
struct Lattice {
  int dim = 0;
  Mat generators;

  Lattice() = default;
  Lattice(int d, Mat g);

  // generators(i, j) with basic range checking, 0-indexed
  double entry(int i, int j) const;
  double det() const { return generators.determinant(); }
};

struct GaugeFixResult {
  // lower triangular; diagonal positive except the last entry, which
  // carries sign(det) so the rotation can stay proper
  Lattice lattice;
  // proper orthogonal, rotation * input generators = fixed generators
  Mat rotation;
};

// Remove the rotational part of a framework's placement freedom by rotating
// the generator matrix to lower triangular form.
GaugeFixResult gauge_fix(const Lattice& lat);

}  // namespace tensekit
