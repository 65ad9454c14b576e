#include "tensekit/framework.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace tensekit {

namespace {

const char* kAxisNames = "xyz";

}  // namespace

int PeriodicGraph::vertexIndex(const std::string& label) const {
  for (size_t v = 0; v < vertexOrbits.size(); ++v)
    if (vertexOrbits[v] == label) return static_cast<int>(v);
  return -1;
}

void validate_graph(const PeriodicGraph& g) {
  if (g.dim != 2 && g.dim != 3) throw SceneError("graph dimension must be 2 or 3");
  std::set<std::string> seen;
  for (const auto& label : g.vertexOrbits) {
    if (label.empty()) throw SceneError("empty vertex label");
    if (label.find('.') != std::string::npos)
      throw SceneError("vertex label may not contain '.': " + label);
    if (!seen.insert(label).second) throw SceneError("duplicate vertex label: " + label);
  }
  const int n = static_cast<int>(g.vertexOrbits.size());
  if (n == 0) throw SceneError("graph has no vertices");

  std::set<std::tuple<int, int, std::vector<int>>> edgeKeys;
  std::vector<int> component(n, -1);
  for (const auto& e : g.edges) {
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
      throw SceneError("edge endpoint out of range");
    if (e.lift.size() != g.dim) throw SceneError("edge lift has wrong dimension");
    if (e.i == e.j && e.lift.isZero())
      throw SceneError("edge connects a vertex to itself with zero lift");
    // simple as a quotient: no repeated (i, j, lift) in either orientation
    std::vector<int> lv(e.lift.data(), e.lift.data() + e.lift.size());
    std::vector<int> lvNeg(lv.size());
    std::transform(lv.begin(), lv.end(), lvNeg.begin(), std::negate<int>());
    if (!edgeKeys.insert({e.i, e.j, lv}).second || edgeKeys.count({e.j, e.i, lvNeg}))
      throw SceneError("duplicate edge between the same realized endpoints");
    if (e.is_bar()) {
      if (e.bar().length <= 0) throw SceneError("bar length must be positive");
    } else {
      if (e.cable().rest < 0) throw SceneError("cable rest length must be nonnegative");
      if (e.cable().stiffness <= 0) throw SceneError("cable stiffness must be positive");
    }
  }

  // quotient connectivity; lift-rank connectivity of the infinite graph is
  // not required (finite structures ship with a pinned lattice)
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : g.edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<int> stack{0};
  std::vector<bool> visited(n, false);
  visited[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!visited[w]) {
        visited[w] = true;
        ++reached;
        stack.push_back(w);
      }
  }
  if (reached < n) throw SceneError("quotient graph is disconnected");
}

Vec edge_vector(const PeriodicGraph& g, const Placement& p, const Lattice& lat,
                int edgeIndex) {
  if (edgeIndex < 0 || edgeIndex >= static_cast<int>(g.edges.size()))
    throw DomainError("edge index out of range");
  const Edge& e = g.edges[edgeIndex];
  return p.point(e.j) + lat.generators * e.lift.cast<double>() - p.point(e.i);
}

SupercellGeometry supercell(const PeriodicGraph& g, const Placement& p,
                            const Lattice& lat, const IVec& reps) {
  const int d = g.dim;
  if (reps.size() != d) throw DomainError("reps must have one entry per dimension");
  for (int k = 0; k < d; ++k)
    if (reps[k] < 1) throw DomainError("reps entries must be >= 1");

  // per-cell motif: realized (vertex, lift) endpoints of the quotient edges
  std::map<std::pair<int, std::vector<int>>, Vec> motif;
  auto addPoint = [&](int v, const IVec& lift) {
    std::vector<int> key(lift.data(), lift.data() + lift.size());
    motif.try_emplace({v, key}, p.point(v) + lat.generators * lift.cast<double>());
  };
  IVec zero = IVec::Zero(d);
  for (const auto& e : g.edges) {
    addPoint(e.i, zero);
    addPoint(e.j, e.lift);
  }
  for (int v = 0; v < static_cast<int>(g.vertexOrbits.size()); ++v) addPoint(v, zero);

  SupercellGeometry out;
  std::vector<IVec> cells;
  IVec cell = IVec::Zero(d);
  for (;;) {
    cells.push_back(cell);
    int k = 0;
    for (; k < d; ++k) {
      if (++cell[k] < reps[k]) break;
      cell[k] = 0;
    }
    if (k == d) break;
  }

  for (const auto& c : cells) {
    Vec shift = lat.generators * c.cast<double>();
    for (const auto& [key, pt] : motif) {
      std::string label = g.vertexOrbits[key.first];
      for (int k = 0; k < d; ++k) {
        int m = key.second[k] + c[k];
        if (m != 0) label += (m > 0 ? "+" : "") + std::to_string(m) + "g" + std::to_string(k + 1);
      }
      out.vertices.push_back({label, pt + shift});
    }
    for (size_t ei = 0; ei < g.edges.size(); ++ei) {
      const Edge& e = g.edges[ei];
      Vec a = p.point(e.i) + shift;
      Vec b = p.point(e.j) + lat.generators * e.lift.cast<double>() + shift;
      out.segments.push_back({a, b, e.is_bar(), static_cast<int>(ei)});
    }
  }
  return out;
}

std::string SlotLayout::name(int slot) const {
  if (slot < 0 || slot >= total()) throw DomainError("slot index out of range");
  int vertexSlots = dim * numVertices();
  if (slot < vertexSlots)
    return "vertex." + labels[slot / dim] + "." + kAxisNames[slot % dim];
  int k = slot - vertexSlots;
  return "lattice." + std::to_string(k / dim + 1) + std::to_string(k % dim + 1);
}

int SlotLayout::parse(const std::string& name) const {
  auto fail = [&] { throw SceneError("unknown slot name: " + name); };
  if (name.rfind("lattice.", 0) == 0) {
    std::string idx = name.substr(8);
    if (idx.size() != 2 || idx[0] < '1' || idx[0] > '0' + dim || idx[1] < '1' ||
        idx[1] > '0' + dim)
      fail();
    return latticeSlot(idx[0] - '1', idx[1] - '1');
  }
  if (name.rfind("vertex.", 0) == 0) {
    auto lastDot = name.rfind('.');
    if (lastDot == 6) fail();
    std::string label = name.substr(7, lastDot - 7);
    std::string axis = name.substr(lastDot + 1);
    int v = -1;
    for (int k = 0; k < numVertices(); ++k)
      if (labels[k] == label) v = k;
    if (v < 0) fail();
    if (axis.size() != 1) fail();
    auto axisPos = std::string(kAxisNames).find(axis[0]);
    if (axisPos == std::string::npos || static_cast<int>(axisPos) >= dim) fail();
    return vertexSlot(v, static_cast<int>(axisPos));
  }
  fail();
  return -1;
}

}  // namespace tensekit
