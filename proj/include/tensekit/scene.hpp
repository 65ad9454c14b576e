#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tensekit/descent.hpp"
#include "tensekit/framework.hpp"

namespace tensekit {

// One listed vertex. Entries may be translated copies of an earlier orbit
// (alias), so a scene can spell out a whole motif while the quotient stays
// minimal; aliased coordinates are validated against base + lattice * lift.
struct VertexEntry {
  std::string label;
  Vec coords;
  int aliasOf = -1;  // orbit index, or -1 for an orbit representative
  IVec aliasLift;
};

struct ContactCableParams {
  double incomingRest = 0.1;
  double incomingStiffness = 1.0;
  double internalRest = -1.0;  // resolved to 2 * radius at parse time
  double internalStiffness = 30.0;
};

struct Scene {
  std::string name;
  int dim = 0;
  std::vector<VertexEntry> vertices;  // as listed, aliases included
  PeriodicGraph graph;                // orbits only
  Placement placement;
  Lattice lattice;
  std::vector<std::string> tauSlots;  // lattice slots tied to the stretch parameter
  std::vector<std::string> pinnedSlots;
  std::vector<int> contacts;  // edge indices to replace by tetrahedra
  double radius = 0.0;
  ContactCableParams contactCables;
  DescentSettings descent;
  TrackerSettings tracker;
  nlohmann::json provenance;  // free-form construction notes
  std::string canonical;      // canonical serialization; its hash goes into traces
  std::uint64_t hash = 0;

  // initial value of the stretch parameter (the stored tau-slot entry)
  double initialTau() const;
};

Scene parse_scene_json(const nlohmann::json& j);
Scene parse_scene(const std::string& path);
nlohmann::json serialize_scene(const Scene& s);

}  // namespace tensekit
