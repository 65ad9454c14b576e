#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tensekit/constraint_system.hpp"
#include "tensekit/scene.hpp"

namespace tensekit {

// Contact graph after strand splitting: every contact vertex is replaced by
// an entry and an exit copy, contact bars become tetrahedral contact tuples,
// and each contact gains four internal cross cables.
struct SplitFramework {
  PeriodicGraph graph;
  Placement placement;
  std::vector<TetraContact> contacts;
};

// Replace each listed contact bar by a tetrahedral contact block. Strands are
// walked through the contact vertices (each must carry exactly two cables and
// the one contact bar) to fix a travel direction: chains start at their
// smallest-index anchor, cycles at their smallest-index contact vertex heading
// toward the smaller neighbor. Entry/exit copies are seeded at -/+ radius/2
// along the local travel direction. An empty contact list returns the input
// unchanged.
SplitFramework tetrahedralize(const PeriodicGraph& graph,
                              const Placement& placement, const Lattice& lattice,
                              const std::vector<int>& contactEdges, double radius,
                              const ContactCableParams& cables);

// Assemble the constrained system for a scene, splitting contacts first.
FrameworkSystem build_system(const Scene& scene);

// Constrained equilibrium at one value of the stretch parameter.
struct Equilibrium {
  Vec x;
  Vec lambda;  // constraint multipliers of the stationarity system
  double tau = 0;
  double energy = 0;
  double gradNorm = 0;      // projected energy gradient
  double residualNorm = 0;  // constraint residual
  double kktNorm = 0;       // full stationarity residual after the polish
  int descentIterations = 0;
};

// Feasibility restore, projected gradient descent, then a Newton polish of
// the stationarity system down to the tracker's start tolerance.
Equilibrium equilibrate(const FrameworkSystem& sys, const Vec& x0, double tau,
                        const DescentSettings& descent = {},
                        const TrackerSettings& tracker = {});

// One accepted point of a deformation run.
struct TraceStep {
  double tau = 0;
  Vec x;       // internal slots (empty when read back from a file)
  Vec lambda;  // multipliers
  Mat lattice; // realized generator matrix, generators in columns
  Mat coords;  // realized placement, one column per vertex
  double energy = 0;
  double residualNorm = 0;
  double gradNorm = 0;  // projected energy gradient
  // smallest eigenvalue of the reduced stationarity Hessian; +inf when the
  // variety has no tangent directions, NaN when not computed
  double reducedMinEig = 0;
};

struct TraceMeta {
  std::string sceneName;
  std::uint64_t sceneHash = 0;
  int dim = 0;
  std::vector<std::string> vertexLabels;
  double tauStart = 0;
  double tauEnd = 0;
  double step = 0;  // positive magnitude; direction comes from the endpoints
  int multipliers = 0;
  TrackerSettings tracker;
};

struct DeformationTrace {
  TraceMeta meta;
  std::vector<TraceStep> steps;
  bool complete = false;
  std::string failure;  // empty on success

  double lastStableTau() const {
    return steps.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : steps.back().tau;
  }
};

// Uniform parameter grid from tauStart to tauEnd in steps of magnitude step,
// either direction. Throws DomainError when step does not divide the span.
std::vector<double> tau_grid(double tauStart, double tauEnd, double step);

// Continue the stationarity system of the equilibrium along the stretch
// parameter, one grid interval at a time. Tracker failure ends the run early;
// the steps accepted so far stay in the trace and the failure is recorded.
// onStep, when given, sees every accepted step as soon as it is recorded.
DeformationTrace deform(const FrameworkSystem& sys, const Equilibrium& start,
                        double tauEnd, double step,
                        const TrackerSettings& tracker = {},
                        const std::function<void(const TraceStep&)>& onStep = {});

}  // namespace tensekit
