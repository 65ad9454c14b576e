#pragma once

#include <array>
#include <memory>
#include <vector>

#include "tensekit/descent.hpp"
#include "tensekit/framework.hpp"

namespace tensekit {

// Realized point: orbit representative shifted by an integer combination of
// the lattice generators.
struct PointRef {
  int vertex = 0;
  IVec lift;
};

// One tetrahedral contact between two filament strands. Each side lists the
// four consecutive realized points along that strand in travel order:
// previous exit, entry, exit, next entry.
struct TetraContact {
  std::array<PointRef, 4> side1;
  std::array<PointRef, 4> side2;
  double radius = 0.0;
};

// Assembled constrained model of one framework. The stacked residual lists
// plain bars first (graph edge order), then nine rows per contact. Cables
// contribute to the scalar energy only. Everything is a function of the free
// slots x (internal coordinates, in slot order) and the stretch parameter
// tau, which overwrites every tau-tied lattice slot; pinned slots keep their
// seed values.
class FrameworkSystem {
 public:
  FrameworkSystem(PeriodicGraph graph, Placement seed, Lattice seedLattice,
                  std::vector<TetraContact> contacts,
                  const std::vector<std::string>& tauSlots,
                  const std::vector<std::string>& pinnedSlots);

  int n() const { return n_; }
  int m() const { return m_; }
  int dim() const { return layout_.dim; }
  const SlotLayout& layout() const { return layout_; }
  const PeriodicGraph& graph() const { return graph_; }
  const std::vector<TetraContact>& contacts() const { return contacts_; }
  const std::vector<int>& internalSlots() const { return internalSlots_; }

  Vec seed_state() const;
  double seed_tau() const;

  // placement and lattice described by a state (pinned slots stay at seed)
  void realize(const Vec& x, double tau, Placement& p, Lattice& lat) const;

  // wrap scales the contact wrap-coupling target (see rows::tetra_rows);
  // 1 is the real model, lower values serve the straightened-seed ramp
  Vec residual(const Vec& x, double tau, double wrap = 1.0) const;
  void residual_jacobian(const Vec& x, double tau, Vec& g, Mat& Dg,
                         Vec& gTau, double wrap = 1.0) const;
  double energy(const Vec& x, double tau) const;
  void energy_gradient(const Vec& x, double tau, double& q, Vec& grad,
                       double& qTau) const;
  // Hxx = wEnergy * Hess_x(Q) + sum_i weights[i] * Hess_x(g_i), and the
  // matching mixed x/tau column Hxt
  void weighted_hessian(const Vec& x, double tau, const Vec& weights,
                        double wEnergy, Mat& Hxx, Vec& Hxt,
                        double wrap = 1.0) const;

  // fixed-tau views implementing the descent interfaces
  std::unique_ptr<ConstraintMap> constraint_map(double tau,
                                                double wrap = 1.0) const;
  std::unique_ptr<ObjectiveMap> objective_map(double tau) const;

  // smallest margin to a nonsmooth or degenerate point: min over cables of
  // |length - rest| (taut cables with rest 0 excluded) and over contact
  // tuples of the six guard norms
  double kink_margin(const Vec& x, double tau) const;

 private:
  struct GroupPoint {
    int vertex = 0;
    IVec lift;
    int localBase = 0;  // local index of the vertex's first coordinate
  };
  struct Group {
    bool isTetra = false;
    int firstRow = 0;  // -1 for cable groups
    double barLength = 0.0;
    double radius = 0.0;
    double rest = 0.0;
    double stiffness = 0.0;
    std::vector<GroupPoint> points;
    std::vector<int> globals;  // local slot -> global slot
    int latticeLocalBase = 0;
  };

  Group build_group(const std::vector<PointRef>& pts) const;
  Vec full_slots(const Vec& x, double tau) const;

  template <class T>
  void eval_group(const Group& grp, const Vec& slots, T* rowsOut,
                  T* energyOut, double wrap) const;
  template <class T>
  std::vector<T> seed_locals(const Group& grp, const Vec& slots) const;

  PeriodicGraph graph_;
  std::vector<TetraContact> contacts_;
  SlotLayout layout_;
  Vec seedSlots_;
  double seedTau_ = 0.0;
  std::vector<int> slotKind_;       // 0 internal, 1 tau, 2 pinned
  std::vector<int> internalIndex_;  // global slot -> x index, -1 otherwise
  std::vector<int> internalSlots_;  // x index -> global slot
  std::vector<Group> rowGroups_;
  std::vector<Group> cableGroups_;
  int n_ = 0;
  int m_ = 0;
};

// Build the contact tuples and system straight from already-split data; the
// scene-level pipeline (strand splitting, seeding) lives in pipeline.hpp.

}  // namespace tensekit
