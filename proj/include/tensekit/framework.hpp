#pragma once

#include <string>
#include <variant>
#include <vector>

#include "tensekit/common.hpp"
#include "tensekit/lattice.hpp"

namespace tensekit {

struct BarKind {
  double length;  // exact length constraint, > 0
};

struct CableKind {
  double rest;       // natural length, >= 0; resists stretching only
  double stiffness;  // > 0
};

using EdgeKind = std::variant<BarKind, CableKind>;

// Quotient edge. The realized edge runs from p(i) to p(j) + generators*lift.
struct Edge {
  int i = 0;
  int j = 0;
  IVec lift;
  EdgeKind kind;

  bool is_bar() const { return std::holds_alternative<BarKind>(kind); }
  const BarKind& bar() const { return std::get<BarKind>(kind); }
  const CableKind& cable() const { return std::get<CableKind>(kind); }
};

// Finite quotient of a d-periodic graph: one entry per vertex orbit, edges
// carry integer lift vectors.
struct PeriodicGraph {
  int dim = 0;
  std::vector<std::string> vertexOrbits;
  std::vector<Edge> edges;

  int vertexIndex(const std::string& label) const;  // -1 when absent
};

// Coordinates of the orbit representatives, one column per vertex orbit.
// Translated copies derive from the lattice, so the periodicity
// compatibility holds by construction.
struct Placement {
  Mat coords;  // dim x |V|

  Vec point(int v) const { return coords.col(v); }
};

void validate_graph(const PeriodicGraph& g);

// Displacement of edge e's realized endpoints including the periodic lift.
Vec edge_vector(const PeriodicGraph& g, const Placement& p, const Lattice& lat,
                int edgeIndex);

struct SupercellGeometry {
  struct Vertex {
    std::string label;
    Vec point;
  };
  struct Segment {
    Vec a, b;
    bool isBar;
    int edgeIndex;  // quotient edge this copy came from
  };
  std::vector<Vertex> vertices;
  std::vector<Segment> segments;
};

// Explicit finite geometry: reps_1 x ... x reps_d translated copies of the
// per-cell motif (the deduplicated realized endpoints of the quotient edges,
// plus any untouched orbit representatives).
SupercellGeometry supercell(const PeriodicGraph& g, const Placement& p,
                            const Lattice& lat, const IVec& reps);

// Flat layout of the optimization slots for one framework: all vertex
// coordinates first (dim per orbit), then the lattice entries row-major.
// Public slot names are "vertex.<label>.<x|y|z>" and "lattice.<i><j>" with
// 1-indexed row/column digits.
struct SlotLayout {
  int dim = 0;
  std::vector<std::string> labels;

  int numVertices() const { return static_cast<int>(labels.size()); }
  int total() const { return dim * numVertices() + dim * dim; }
  int vertexSlot(int v, int axis) const { return v * dim + axis; }
  int latticeSlot(int i, int j) const { return dim * numVertices() + i * dim + j; }
  bool isLatticeSlot(int slot) const { return slot >= dim * numVertices(); }

  std::string name(int slot) const;
  // throws SceneError on malformed or unknown names
  int parse(const std::string& name) const;
};

}  // namespace tensekit
