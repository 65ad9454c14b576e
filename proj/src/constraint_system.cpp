#include "tensekit/constraint_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <type_traits>

#include "tensekit/rows.hpp"

namespace tensekit {

namespace {

enum SlotKind { kInternal = 0, kTau = 1, kPinned = 2 };

template <class T>
rows::P3<T> make_point(const std::vector<T>& z, int dim, int localBase,
                       const IVec& lift, int latticeLocalBase) {
  rows::P3<T> p{T(0.0), T(0.0), T(0.0)};
  for (int k = 0; k < dim; ++k) {
    T acc = z[localBase + k];
    for (int j = 0; j < dim; ++j) {
      int steps = lift[j];
      if (steps != 0)
        acc = acc + static_cast<double>(steps) * z[latticeLocalBase + k * dim + j];
    }
    p[k] = acc;
  }
  return p;
}

}  // namespace

FrameworkSystem::FrameworkSystem(PeriodicGraph graph, Placement seed,
                                 Lattice seedLattice,
                                 std::vector<TetraContact> contacts,
                                 const std::vector<std::string>& tauSlots,
                                 const std::vector<std::string>& pinnedSlots)
    : graph_(std::move(graph)), contacts_(std::move(contacts)) {
  validate_graph(graph_);
  const int d = graph_.dim;
  const int nv = static_cast<int>(graph_.vertexOrbits.size());
  if (seed.coords.rows() != d || seed.coords.cols() != nv)
    throw SceneError("placement shape does not match the graph");
  if (seedLattice.dim != d) throw SceneError("lattice dimension mismatch");

  layout_.dim = d;
  layout_.labels = graph_.vertexOrbits;

  seedSlots_ = Vec::Zero(layout_.total());
  for (int v = 0; v < nv; ++v)
    for (int k = 0; k < d; ++k) seedSlots_[layout_.vertexSlot(v, k)] = seed.coords(k, v);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      seedSlots_[layout_.latticeSlot(i, j)] = seedLattice.generators(i, j);

  slotKind_.assign(layout_.total(), kInternal);
  for (const auto& name : tauSlots) {
    int s = layout_.parse(name);
    if (!layout_.isLatticeSlot(s))
      throw SceneError("stretch parameter must tie lattice slots, got " + name);
    slotKind_[s] = kTau;
  }
  for (const auto& name : pinnedSlots) {
    int s = layout_.parse(name);
    if (slotKind_[s] == kTau)
      throw SceneError("slot is both pinned and tied to the stretch parameter: " + name);
    slotKind_[s] = kPinned;
  }

  bool haveTau = false;
  for (int s = 0; s < layout_.total(); ++s) {
    if (slotKind_[s] != kTau) continue;
    if (!haveTau) {
      seedTau_ = seedSlots_[s];
      haveTau = true;
    } else if (std::abs(seedSlots_[s] - seedTau_) > 1e-9) {
      throw SceneError("tau-tied lattice slots disagree at the seed");
    }
  }

  internalIndex_.assign(layout_.total(), -1);
  for (int s = 0; s < layout_.total(); ++s)
    if (slotKind_[s] == kInternal) {
      internalIndex_[s] = static_cast<int>(internalSlots_.size());
      internalSlots_.push_back(s);
    }
  n_ = static_cast<int>(internalSlots_.size());

  int row = 0;
  for (size_t ei = 0; ei < graph_.edges.size(); ++ei) {
    const Edge& e = graph_.edges[ei];
    PointRef a{e.i, IVec::Zero(d)};
    PointRef b{e.j, e.lift};
    Group grp = build_group({a, b});
    if (e.is_bar()) {
      grp.firstRow = row++;
      grp.barLength = e.bar().length;
      rowGroups_.push_back(std::move(grp));
    } else {
      grp.firstRow = -1;
      grp.rest = e.cable().rest;
      grp.stiffness = e.cable().stiffness;
      cableGroups_.push_back(std::move(grp));
    }
  }
  for (const auto& c : contacts_) {
    if (d != 3) throw SceneError("tetrahedral contacts need a three-dimensional scene");
    if (c.radius <= 0) throw SceneError("contact radius must be positive");
    std::vector<PointRef> pts;
    for (const auto& pr : c.side1) pts.push_back(pr);
    for (const auto& pr : c.side2) pts.push_back(pr);
    for (const auto& pr : pts) {
      if (pr.vertex < 0 || pr.vertex >= nv)
        throw SceneError("contact references a vertex out of range");
      if (pr.lift.size() != d) throw SceneError("contact lift has wrong dimension");
    }
    Group grp = build_group(pts);
    grp.isTetra = true;
    grp.radius = c.radius;
    grp.firstRow = row;
    row += 9;
    rowGroups_.push_back(std::move(grp));
  }
  m_ = row;
  if (m_ > n_)
    throw SceneError("overconstrained framework: " + std::to_string(m_) +
                     " residual rows but only " + std::to_string(n_) +
                     " free coordinates");
}

FrameworkSystem::Group FrameworkSystem::build_group(
    const std::vector<PointRef>& pts) const {
  const int d = layout_.dim;
  Group grp;
  std::map<int, int> vertexBase;
  for (const auto& pr : pts) {
    auto [it, fresh] = vertexBase.try_emplace(pr.vertex, static_cast<int>(grp.globals.size()));
    if (fresh)
      for (int k = 0; k < d; ++k) grp.globals.push_back(layout_.vertexSlot(pr.vertex, k));
    grp.points.push_back({pr.vertex, pr.lift, it->second});
  }
  grp.latticeLocalBase = static_cast<int>(grp.globals.size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) grp.globals.push_back(layout_.latticeSlot(i, j));
  if (static_cast<int>(grp.globals.size()) > ad::kMaxLocals)
    throw DomainError("row gathers more local slots than the derivative storage holds");
  return grp;
}

Vec FrameworkSystem::full_slots(const Vec& x, double tau) const {
  if (x.size() != n_) throw DomainError("state has wrong length");
  Vec slots = seedSlots_;
  for (int k = 0; k < n_; ++k) slots[internalSlots_[k]] = x[k];
  for (int s = 0; s < layout_.total(); ++s)
    if (slotKind_[s] == kTau) slots[s] = tau;
  return slots;
}

template <class T>
std::vector<T> FrameworkSystem::seed_locals(const Group& grp, const Vec& slots) const {
  std::vector<T> z;
  z.reserve(grp.globals.size());
  for (size_t l = 0; l < grp.globals.size(); ++l) {
    if constexpr (std::is_same_v<T, double>)
      z.push_back(slots[grp.globals[l]]);
    else
      z.push_back(T::seed(slots[grp.globals[l]], static_cast<int>(l)));
  }
  return z;
}

template <class T>
void FrameworkSystem::eval_group(const Group& grp, const Vec& slots, T* rowsOut,
                                 T* energyOut, double wrap) const {
  const int d = layout_.dim;
  std::vector<T> z = seed_locals<T>(grp, slots);
  if (grp.isTetra) {
    std::array<rows::P3<T>, 8> pts;
    for (int k = 0; k < 8; ++k)
      pts[k] = make_point(z, d, grp.points[k].localBase, grp.points[k].lift,
                          grp.latticeLocalBase);
    auto r = rows::tetra_rows(pts, grp.radius, wrap);
    for (int k = 0; k < 9; ++k) rowsOut[k] = r[k];
    return;
  }
  rows::P3<T> a = make_point(z, d, grp.points[0].localBase, grp.points[0].lift,
                             grp.latticeLocalBase);
  rows::P3<T> b = make_point(z, d, grp.points[1].localBase, grp.points[1].lift,
                             grp.latticeLocalBase);
  if (grp.firstRow >= 0)
    rowsOut[0] = rows::bar_row(a, b, grp.barLength);
  else
    *energyOut = rows::cable_term(a, b, grp.rest, grp.stiffness);
}

Vec FrameworkSystem::seed_state() const {
  Vec x(n_);
  for (int k = 0; k < n_; ++k) x[k] = seedSlots_[internalSlots_[k]];
  return x;
}

double FrameworkSystem::seed_tau() const { return seedTau_; }

void FrameworkSystem::realize(const Vec& x, double tau, Placement& p,
                              Lattice& lat) const {
  Vec slots = full_slots(x, tau);
  const int d = layout_.dim;
  const int nv = layout_.numVertices();
  p.coords.resize(d, nv);
  for (int v = 0; v < nv; ++v)
    for (int k = 0; k < d; ++k) p.coords(k, v) = slots[layout_.vertexSlot(v, k)];
  lat.dim = d;
  lat.generators.resize(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) lat.generators(i, j) = slots[layout_.latticeSlot(i, j)];
}

Vec FrameworkSystem::residual(const Vec& x, double tau, double wrap) const {
  Vec slots = full_slots(x, tau);
  Vec g = Vec::Zero(m_);
  double rowBuf[9];
  for (const auto& grp : rowGroups_) {
    eval_group<double>(grp, slots, rowBuf, nullptr, wrap);
    int count = grp.isTetra ? 9 : 1;
    for (int k = 0; k < count; ++k) g[grp.firstRow + k] = rowBuf[k];
  }
  return g;
}

void FrameworkSystem::residual_jacobian(const Vec& x, double tau, Vec& g, Mat& Dg,
                                        Vec& gTau, double wrap) const {
  Vec slots = full_slots(x, tau);
  g = Vec::Zero(m_);
  Dg = Mat::Zero(m_, n_);
  gTau = Vec::Zero(m_);
  std::vector<ad::D1> rowBuf(9);
  for (const auto& grp : rowGroups_) {
    eval_group<ad::D1>(grp, slots, rowBuf.data(), nullptr, wrap);
    int count = grp.isTetra ? 9 : 1;
    for (int k = 0; k < count; ++k) {
      int row = grp.firstRow + k;
      g[row] = rowBuf[k].v;
      for (size_t l = 0; l < grp.globals.size(); ++l) {
        int s = grp.globals[l];
        double dv = rowBuf[k].g[static_cast<int>(l)];
        if (slotKind_[s] == kInternal)
          Dg(row, internalIndex_[s]) += dv;
        else if (slotKind_[s] == kTau)
          gTau[row] += dv;
      }
    }
  }
}

double FrameworkSystem::energy(const Vec& x, double tau) const {
  Vec slots = full_slots(x, tau);
  double q = 0;
  for (const auto& grp : cableGroups_) {
    double term = 0;
    eval_group<double>(grp, slots, nullptr, &term, 1.0);
    q += term;
  }
  return q;
}

void FrameworkSystem::energy_gradient(const Vec& x, double tau, double& q,
                                      Vec& grad, double& qTau) const {
  Vec slots = full_slots(x, tau);
  q = 0;
  grad = Vec::Zero(n_);
  qTau = 0;
  for (const auto& grp : cableGroups_) {
    ad::D1 term;
    eval_group<ad::D1>(grp, slots, nullptr, &term, 1.0);
    q += term.v;
    for (size_t l = 0; l < grp.globals.size(); ++l) {
      int s = grp.globals[l];
      double dv = term.g[static_cast<int>(l)];
      if (slotKind_[s] == kInternal)
        grad[internalIndex_[s]] += dv;
      else if (slotKind_[s] == kTau)
        qTau += dv;
    }
  }
}

void FrameworkSystem::weighted_hessian(const Vec& x, double tau, const Vec& weights,
                                       double wEnergy, Mat& Hxx, Vec& Hxt,
                                       double wrap) const {
  if (weights.size() != m_) throw DomainError("weight vector has wrong length");
  Vec slots = full_slots(x, tau);
  Hxx = Mat::Zero(n_, n_);
  Hxt = Vec::Zero(n_);

  auto scatter = [&](const Group& grp, const ad::D2& term, double w) {
    if (w == 0) return;
    const int nl = static_cast<int>(grp.globals.size());
    for (int l1 = 0; l1 < nl; ++l1) {
      int s1 = grp.globals[l1];
      if (slotKind_[s1] != kInternal) continue;
      int i1 = internalIndex_[s1];
      for (int l2 = 0; l2 < nl; ++l2) {
        int s2 = grp.globals[l2];
        double h = term.h(l1, l2);
        if (h == 0) continue;
        if (slotKind_[s2] == kInternal)
          Hxx(i1, internalIndex_[s2]) += w * h;
        else if (slotKind_[s2] == kTau)
          Hxt[i1] += w * h;
      }
    }
  };

  std::vector<ad::D2> rowBuf(9);
  for (const auto& grp : rowGroups_) {
    int count = grp.isTetra ? 9 : 1;
    bool active = false;
    for (int k = 0; k < count; ++k) active = active || weights[grp.firstRow + k] != 0;
    if (!active) continue;
    eval_group<ad::D2>(grp, slots, rowBuf.data(), nullptr, wrap);
    for (int k = 0; k < count; ++k) scatter(grp, rowBuf[k], weights[grp.firstRow + k]);
  }
  if (wEnergy != 0)
    for (const auto& grp : cableGroups_) {
      ad::D2 term;
      eval_group<ad::D2>(grp, slots, nullptr, &term, 1.0);
      scatter(grp, term, wEnergy);
    }
}

double FrameworkSystem::kink_margin(const Vec& x, double tau) const {
  Vec slots = full_slots(x, tau);
  double margin = std::numeric_limits<double>::infinity();
  const int d = layout_.dim;
  auto pointOf = [&](const GroupPoint& gp, const Group& grp) {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    for (int k = 0; k < d; ++k) {
      double acc = slots[grp.globals[gp.localBase + k]];
      for (int j = 0; j < d; ++j)
        if (gp.lift[j] != 0)
          acc += gp.lift[j] * slots[grp.globals[grp.latticeLocalBase + k * d + j]];
      p[k] = acc;
    }
    return p;
  };
  for (const auto& grp : cableGroups_) {
    if (grp.rest == 0) continue;  // smooth everywhere
    double len = (pointOf(grp.points[1], grp) - pointOf(grp.points[0], grp)).norm();
    margin = std::min(margin, std::abs(len - grp.rest));
  }
  for (const auto& grp : rowGroups_) {
    if (!grp.isTetra) continue;
    Eigen::Vector3d p[8];
    for (int k = 0; k < 8; ++k) p[k] = pointOf(grp.points[k], grp);
    const std::pair<int, int> guarded[] = {{0, 1}, {3, 2}, {1, 2},
                                           {4, 5}, {7, 6}, {5, 6}};
    for (auto [a, b] : guarded)
      margin = std::min(margin, (p[b] - p[a]).norm());
  }
  return margin;
}

namespace {

class FixedTauConstraints : public ConstraintMap {
 public:
  FixedTauConstraints(const FrameworkSystem& sys, double tau, double wrap)
      : sys_(sys), tau_(tau), wrap_(wrap) {}
  int n() const override { return sys_.n(); }
  int m() const override { return sys_.m(); }
  Vec residual(const Vec& x) const override {
    return sys_.residual(x, tau_, wrap_);
  }
  Mat jacobian(const Vec& x) const override {
    Vec g, gTau;
    Mat Dg;
    sys_.residual_jacobian(x, tau_, g, Dg, gTau, wrap_);
    return Dg;
  }
  Mat hessianContraction(const Vec& x, const Vec& mu) const override {
    Mat Hxx;
    Vec Hxt;
    sys_.weighted_hessian(x, tau_, mu, 0.0, Hxx, Hxt, wrap_);
    return Hxx;
  }

 private:
  const FrameworkSystem& sys_;
  double tau_;
  double wrap_;
};

class FixedTauObjective : public ObjectiveMap {
 public:
  FixedTauObjective(const FrameworkSystem& sys, double tau) : sys_(sys), tau_(tau) {}
  double value(const Vec& x) const override { return sys_.energy(x, tau_); }
  Vec gradient(const Vec& x) const override {
    double q, qTau;
    Vec grad;
    sys_.energy_gradient(x, tau_, q, grad, qTau);
    return grad;
  }

 private:
  const FrameworkSystem& sys_;
  double tau_;
};

}  // namespace

std::unique_ptr<ConstraintMap> FrameworkSystem::constraint_map(double tau,
                                                               double wrap) const {
  return std::make_unique<FixedTauConstraints>(*this, tau, wrap);
}

std::unique_ptr<ObjectiveMap> FrameworkSystem::objective_map(double tau) const {
  return std::make_unique<FixedTauObjective>(*this, tau);
}

}  // namespace tensekit
