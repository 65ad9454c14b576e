#include "tensekit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tensekit {

namespace {

// position of a cable at one of its endpoints: end 0 is the i side, 1 the j
struct CableSlot {
  int edge = -1;
  int end = 0;
};

bool same_slot(const CableSlot& a, int edge, int end) {
  return a.edge == edge && a.end == end;
}

int far_vertex(const Edge& e, int end) { return end == 0 ? e.j : e.i; }

// lift gained by walking across e away from the given end
IVec walk_lift(const Edge& e, int end) {
  return end == 0 ? e.lift : IVec(-e.lift);
}

// what the strand walk learned about one contact vertex
struct StrandStop {
  bool seen = false;
  CableSlot incoming, outgoing;
  int prevVertex = -1, nextVertex = -1;
  IVec prevLift, nextLift;  // relative to this vertex's cell
};

}  // namespace

SplitFramework tetrahedralize(const PeriodicGraph& graph,
                              const Placement& placement, const Lattice& lattice,
                              const std::vector<int>& contactEdges, double radius,
                              const ContactCableParams& cables) {
  if (contactEdges.empty()) return {graph, placement, {}};
  validate_graph(graph);
  if (graph.dim != 3)
    throw SceneError("contacts require a three dimensional framework");
  if (radius <= 0) throw SceneError("contact radius must be positive");

  const int nv = static_cast<int>(graph.vertexOrbits.size());
  const int ne = static_cast<int>(graph.edges.size());
  std::vector<char> isContactBar(ne, 0);
  for (int ei : contactEdges) {
    if (ei < 0 || ei >= ne)
      throw SceneError("contact index out of range: " + std::to_string(ei));
    if (!graph.edges[ei].is_bar())
      throw SceneError("contact edge " + std::to_string(ei) + " is not a bar");
    if (isContactBar[ei])
      throw SceneError("duplicate contact index " + std::to_string(ei));
    isContactBar[ei] = 1;
  }

  std::vector<char> isContact(nv, 0);
  for (int ei : contactEdges) {
    isContact[graph.edges[ei].i] = 1;
    isContact[graph.edges[ei].j] = 1;
  }

  std::vector<std::vector<CableSlot>> slots(nv);
  std::vector<int> barCount(nv, 0);
  for (int e = 0; e < ne; ++e) {
    const Edge& ed = graph.edges[e];
    if (ed.is_bar()) {
      ++barCount[ed.i];
      ++barCount[ed.j];
    } else {
      slots[ed.i].push_back({e, 0});
      slots[ed.j].push_back({e, 1});
    }
  }
  for (int v = 0; v < nv; ++v)
    if (isContact[v] && (slots[v].size() != 2 || barCount[v] != 1))
      throw SceneError("contact vertex " + graph.vertexOrbits[v] +
                       " must have exactly two cables and one bar");

  // Walk the strands to fix a travel direction through every contact vertex.
  std::vector<StrandStop> stop(nv);
  std::vector<char> cableVisited(ne, 0);

  auto walk = [&](int startVertex, CableSlot out) {
    int v = startVertex;
    IVec lv = IVec::Zero(graph.dim);
    while (true) {
      const Edge& e = graph.edges[out.edge];
      cableVisited[out.edge] = 1;
      int w = far_vertex(e, out.end);
      IVec lw = lv + walk_lift(e, out.end);
      if (!isContact[w] || stop[w].seen) break;
      StrandStop& st = stop[w];
      st.seen = true;
      st.incoming = {out.edge, 1 - out.end};
      st.prevVertex = v;
      st.prevLift = lv - lw;
      st.outgoing = same_slot(slots[w][0], out.edge, 1 - out.end) ? slots[w][1]
                                                                  : slots[w][0];
      const Edge& oe = graph.edges[st.outgoing.edge];
      st.nextVertex = far_vertex(oe, st.outgoing.end);
      st.nextLift = walk_lift(oe, st.outgoing.end);
      v = w;
      lv = lw;
      out = st.outgoing;
    }
  };

  // chains first, entered from their smallest anchor
  std::vector<std::pair<int, CableSlot>> chainStarts;
  for (int e = 0; e < ne; ++e) {
    const Edge& ed = graph.edges[e];
    if (ed.is_bar()) continue;
    if (!isContact[ed.i] && isContact[ed.j]) chainStarts.push_back({ed.i, {e, 0}});
    if (!isContact[ed.j] && isContact[ed.i]) chainStarts.push_back({ed.j, {e, 1}});
  }
  std::sort(chainStarts.begin(), chainStarts.end(),
            [](const auto& a, const auto& b) {
              return a.first != b.first ? a.first < b.first
                                        : a.second.edge < b.second.edge;
            });
  for (const auto& [anchor, slot] : chainStarts)
    if (!cableVisited[slot.edge]) walk(anchor, slot);

  // remaining strands are cycles; head toward the smaller neighbor
  for (int v = 0; v < nv; ++v) {
    if (!isContact[v] || stop[v].seen) continue;
    CableSlot a = slots[v][0], b = slots[v][1];
    int na = far_vertex(graph.edges[a.edge], a.end);
    int nb = far_vertex(graph.edges[b.edge], b.end);
    CableSlot first = a;
    if (nb != na ? nb < na : (b.edge != a.edge ? b.edge < a.edge : b.end < a.end))
      first = b;
    walk(v, first);
  }
  for (int v = 0; v < nv; ++v)
    if (isContact[v] && !stop[v].seen)
      throw Error("internal: strand walk missed a contact vertex");

  // Split graph: contact vertices become an entry and an exit copy.
  SplitFramework out;
  out.graph.dim = graph.dim;
  std::set<std::string> used(graph.vertexOrbits.begin(), graph.vertexOrbits.end());
  auto fresh = [&](const std::string& base) {
    std::string cand = base;
    int k = 2;
    while (used.count(cand)) cand = base + std::to_string(k++);
    used.insert(cand);
    return cand;
  };
  std::vector<int> keepIdx(nv, -1), inIdx(nv, -1), outIdx(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (!isContact[v]) {
      keepIdx[v] = static_cast<int>(out.graph.vertexOrbits.size());
      out.graph.vertexOrbits.push_back(graph.vertexOrbits[v]);
    } else {
      inIdx[v] = static_cast<int>(out.graph.vertexOrbits.size());
      out.graph.vertexOrbits.push_back(fresh(graph.vertexOrbits[v] + "_in"));
      outIdx[v] = static_cast<int>(out.graph.vertexOrbits.size());
      out.graph.vertexOrbits.push_back(fresh(graph.vertexOrbits[v] + "_out"));
    }
  }

  auto realized = [&](int v, const IVec& lift) -> Vec {
    return placement.point(v) + lattice.generators * lift.cast<double>();
  };
  const double eps = radius / 2;
  out.placement.coords.resize(graph.dim,
                              static_cast<int>(out.graph.vertexOrbits.size()));
  for (int v = 0; v < nv; ++v) {
    if (!isContact[v]) {
      out.placement.coords.col(keepIdx[v]) = placement.point(v);
      continue;
    }
    const StrandStop& st = stop[v];
    Vec dir = realized(st.nextVertex, st.nextLift) -
              realized(st.prevVertex, st.prevLift);
    if (dir.norm() <= 1e-12)
      dir = placement.point(v) - realized(st.prevVertex, st.prevLift);
    if (dir.norm() <= 1e-12)
      throw DegenerateConfiguration("no usable travel direction at contact vertex " +
                                    graph.vertexOrbits[v]);
    dir.normalize();
    out.placement.coords.col(inIdx[v]) = placement.point(v) - eps * dir;
    out.placement.coords.col(outIdx[v]) = placement.point(v) + eps * dir;
  }

  // incoming cables re-attach to the copy matching their travel role
  auto mapped_end = [&](int edge, int end, int v) {
    if (!isContact[v]) return keepIdx[v];
    if (same_slot(stop[v].incoming, edge, end)) return inIdx[v];
    if (same_slot(stop[v].outgoing, edge, end)) return outIdx[v];
    throw Error("internal: unmapped cable slot");
  };
  for (int e = 0; e < ne; ++e) {
    if (isContactBar[e]) continue;
    Edge ned = graph.edges[e];
    if (!ned.is_bar()) {
      ned.i = mapped_end(e, 0, graph.edges[e].i);
      ned.j = mapped_end(e, 1, graph.edges[e].j);
    } else {
      ned.i = keepIdx[ned.i];
      ned.j = keepIdx[ned.j];
      if (ned.i < 0 || ned.j < 0)
        throw Error("internal: plain bar touches a contact vertex");
    }
    out.graph.edges.push_back(ned);
  }

  // one tetra tuple per contact bar, then its four cross cables
  auto strand_side = [&](int v, const IVec& shift) {
    const StrandStop& st = stop[v];
    auto exit_of = [&](int w, const IVec& lift) {
      return PointRef{isContact[w] ? outIdx[w] : keepIdx[w], lift};
    };
    auto entry_of = [&](int w, const IVec& lift) {
      return PointRef{isContact[w] ? inIdx[w] : keepIdx[w], lift};
    };
    return std::array<PointRef, 4>{
        exit_of(st.prevVertex, IVec(st.prevLift + shift)),
        PointRef{inIdx[v], shift}, PointRef{outIdx[v], shift},
        entry_of(st.nextVertex, IVec(st.nextLift + shift))};
  };
  const double internalRest =
      cables.internalRest < 0 ? 2 * radius : cables.internalRest;
  for (int ei : contactEdges) {
    const Edge& bar = graph.edges[ei];
    TetraContact tc;
    tc.radius = radius;
    tc.side1 = strand_side(bar.i, IVec::Zero(graph.dim));
    tc.side2 = strand_side(bar.j, bar.lift);
    out.contacts.push_back(tc);
  }
  for (int ei : contactEdges) {
    const Edge& bar = graph.edges[ei];
    for (int a : {inIdx[bar.i], outIdx[bar.i]})
      for (int b : {inIdx[bar.j], outIdx[bar.j]})
        out.graph.edges.push_back(
            {a, b, bar.lift, CableKind{internalRest, cables.internalStiffness}});
  }

  validate_graph(out.graph);
  return out;
}

FrameworkSystem build_system(const Scene& scene) {
  if (scene.contacts.empty())
    return FrameworkSystem(scene.graph, scene.placement, scene.lattice, {},
                           scene.tauSlots, scene.pinnedSlots);
  SplitFramework sf =
      tetrahedralize(scene.graph, scene.placement, scene.lattice, scene.contacts,
                     scene.radius, scene.contactCables);
  return FrameworkSystem(sf.graph, sf.placement, scene.lattice, sf.contacts,
                         scene.tauSlots, scene.pinnedSlots);
}

namespace {

// Stationarity system of the constrained energy in z = (x, multipliers),
// parametrized by the stretch control. The returned callbacks reference sys.
Homotopy stationarity_system(const FrameworkSystem& sys) {
  const FrameworkSystem* s = &sys;
  const int n = sys.n(), m = sys.m();
  Homotopy h;
  h.size = n + m;
  h.H = [s, n, m](const Vec& z, double tau) {
    double q, qTau;
    Vec grad, g, gTau;
    Mat Dg;
    s->energy_gradient(z.head(n), tau, q, grad, qTau);
    s->residual_jacobian(z.head(n), tau, g, Dg, gTau);
    Vec f(n + m);
    f.head(n) = grad;
    if (m > 0) f.head(n) += Dg.transpose() * z.tail(m);
    f.tail(m) = g;
    return f;
  };
  h.dHdx = [s, n, m](const Vec& z, double tau) {
    Mat hxx;
    Vec hxt;
    s->weighted_hessian(z.head(n), tau, z.tail(m), 1.0, hxx, hxt);
    Vec g, gTau;
    Mat Dg;
    s->residual_jacobian(z.head(n), tau, g, Dg, gTau);
    Mat J = Mat::Zero(n + m, n + m);
    J.topLeftCorner(n, n) = hxx;
    if (m > 0) {
      J.topRightCorner(n, m) = Dg.transpose();
      J.bottomLeftCorner(m, n) = Dg;
    }
    return J;
  };
  h.dHdt = [s, n, m](const Vec& z, double tau) {
    Mat hxx;
    Vec hxt;
    s->weighted_hessian(z.head(n), tau, z.tail(m), 1.0, hxx, hxt);
    Vec g, gTau;
    Mat Dg;
    s->residual_jacobian(z.head(n), tau, g, Dg, gTau);
    Vec dt(n + m);
    dt.head(n) = hxt;
    dt.tail(m) = gTau;
    return dt;
  };
  return h;
}

TraceStep make_step(const FrameworkSystem& sys, const Vec& z, double tau) {
  const int n = sys.n(), m = sys.m();
  TraceStep s;
  s.tau = tau;
  s.x = z.head(n);
  s.lambda = z.tail(m);
  Placement p;
  Lattice lat;
  sys.realize(s.x, tau, p, lat);
  s.lattice = lat.generators;
  s.coords = p.coords;
  double q, qTau;
  Vec grad, g, gTau;
  Mat Dg;
  sys.energy_gradient(s.x, tau, q, grad, qTau);
  sys.residual_jacobian(s.x, tau, g, Dg, gTau);
  s.energy = q;
  s.residualNorm = g.norm();
  s.gradNorm = (m > 0 ? tangent_project(Dg, grad) : grad).norm();
  if (n == m) {
    s.reducedMinEig = std::numeric_limits<double>::infinity();
    return s;
  }
  Mat hxx;
  Vec hxt;
  sys.weighted_hessian(s.x, tau, s.lambda, 1.0, hxx, hxt);
  Mat basis;
  if (m == 0) {
    basis = Mat::Identity(n, n);
  } else {
    Eigen::ColPivHouseholderQR<Mat> qr(Mat(Dg.transpose()));
    if (qr.rank() < m) {
      s.reducedMinEig = std::numeric_limits<double>::quiet_NaN();
      return s;
    }
    basis = Mat(qr.householderQ()).rightCols(n - m);
  }
  Mat red = basis.transpose() * hxx * basis;
  red = ((red + red.transpose()) / 2).eval();
  s.reducedMinEig = Eigen::SelfAdjointEigenSolver<Mat>(red).eigenvalues().minCoeff();
  return s;
}

}  // namespace

Equilibrium equilibrate(const FrameworkSystem& sys, const Vec& x0, double tau,
                        const DescentSettings& descent,
                        const TrackerSettings& tracker) {
  auto cmap = sys.constraint_map(tau);
  auto omap = sys.objective_map(tau);
  Vec x = x0;
  if (sys.m() > 0 && sys.residual(x, tau).norm() > 1e-12)
    x = project_to_variety(*cmap, x);
  DescentResult dres = minimize(*cmap, *omap, x, descent, tracker);
  x = dres.x;

  const int n = sys.n(), m = sys.m();
  Homotopy st = stationarity_system(sys);
  Vec z(n + m);
  z.head(n) = x;
  {
    double q, qTau;
    Vec grad, g, gTau;
    Mat Dg;
    sys.energy_gradient(x, tau, q, grad, qTau);
    sys.residual_jacobian(x, tau, g, Dg, gTau);
    if (m > 0)
      z.tail(m) = Mat(Dg.transpose()).colPivHouseholderQr().solve(Vec(-grad));
  }
  double best = st.H(z, tau).norm();
  for (int it = 0; it < 60 && best > tracker.newtonTol; ++it) {
    Eigen::FullPivLU<Mat> lu(st.dHdx(z, tau));
    if (!lu.isInvertible())
      throw SingularJacobian("stationarity polish hit a singular system", tau);
    Vec dz = lu.solve(st.H(z, tau));
    Vec nz = z - dz;
    double r = st.H(nz, tau).norm();
    if (!(r < best)) {  // mild safeguard near the descent tolerance
      nz = z - 0.5 * dz;
      r = st.H(nz, tau).norm();
      if (!(r < best)) break;
    }
    z = nz;
    best = r;
  }
  if (best > tracker.newtonTol)
    throw NoConvergence("stationarity polish stalled at " + format_double(best),
                        tau);

  Equilibrium eq;
  eq.x = z.head(n);
  eq.lambda = z.tail(m);
  eq.tau = tau;
  eq.kktNorm = best;
  eq.descentIterations = dres.iterations;
  double q, qTau;
  Vec grad, g, gTau;
  Mat Dg;
  sys.energy_gradient(eq.x, tau, q, grad, qTau);
  sys.residual_jacobian(eq.x, tau, g, Dg, gTau);
  eq.energy = q;
  eq.gradNorm = (m > 0 ? tangent_project(Dg, grad) : grad).norm();
  eq.residualNorm = g.norm();
  return eq;
}

std::vector<double> tau_grid(double tauStart, double tauEnd, double step) {
  if (!(step > 0)) throw DomainError("stretch step must be positive");
  const double span = tauEnd - tauStart;
  if (span == 0) throw DomainError("stretch interval is empty");
  const double k = std::abs(span) / step;
  const long nsteps = std::lround(k);
  if (nsteps < 1 || std::abs(k - static_cast<double>(nsteps)) > 1e-6)
    throw DomainError("stretch step does not divide the interval");
  std::vector<double> grid(nsteps + 1);
  const double dir = span > 0 ? 1.0 : -1.0;
  for (long i = 0; i <= nsteps; ++i)
    grid[i] = tauStart + dir * step * static_cast<double>(i);
  grid[nsteps] = tauEnd;
  return grid;
}

DeformationTrace deform(const FrameworkSystem& sys, const Equilibrium& start,
                        double tauEnd, double step,
                        const TrackerSettings& tracker,
                        const std::function<void(const TraceStep&)>& onStep) {
  std::vector<double> grid = tau_grid(start.tau, tauEnd, step);
  const int n = sys.n(), m = sys.m();
  if (start.x.size() != n || start.lambda.size() != m)
    throw DomainError("equilibrium does not match the system");

  DeformationTrace tr;
  tr.meta.dim = sys.dim();
  tr.meta.vertexLabels = sys.graph().vertexOrbits;
  tr.meta.tauStart = start.tau;
  tr.meta.tauEnd = tauEnd;
  tr.meta.step = step;
  tr.meta.multipliers = m;
  tr.meta.tracker = tracker;

  Homotopy st = stationarity_system(sys);
  Vec z(n + m);
  z.head(n) = start.x;
  z.tail(m) = start.lambda;

  auto record = [&](double tau) {
    tr.steps.push_back(make_step(sys, z, tau));
    if (onStep) onStep(tr.steps.back());
  };
  try {
    record(grid[0]);
    for (std::size_t k = 1; k < grid.size(); ++k) {
      z = track(st, z, {grid[k - 1], grid[k]}, tracker).back();
      record(grid[k]);
    }
    tr.complete = true;
  } catch (const Error& e) {
    tr.failure = e.what();
    log_info(std::string("deformation stopped early: ") + e.what());
  }
  return tr;
}

}  // namespace tensekit
