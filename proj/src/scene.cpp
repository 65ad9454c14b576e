#include "tensekit/scene.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace tensekit {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) known = true;
    if (!known) throw SceneError("unknown field '" + it.key() + "' in " + ctx);
  }
}

const json& require(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end())
    throw SceneError("missing field '" + std::string(key) + "' in " + ctx);
  return *it;
}

double as_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw SceneError(ctx + " must be a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& ctx) {
  if (!j.is_number_integer()) throw SceneError(ctx + " must be an integer");
  return j.get<int>();
}

std::string as_string(const json& j, const std::string& ctx) {
  if (!j.is_string()) throw SceneError(ctx + " must be a string");
  return j.get<std::string>();
}

Vec as_vec(const json& j, int d, const std::string& ctx) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    throw SceneError(ctx + " must be an array of " + std::to_string(d) + " numbers");
  Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = as_number(j[k], ctx);
  return v;
}

IVec as_ivec(const json& j, int d, const std::string& ctx) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    throw SceneError(ctx + " must be an array of " + std::to_string(d) + " integers");
  IVec v(d);
  for (int k = 0; k < d; ++k) v[k] = as_int(j[k], ctx);
  return v;
}

}  // namespace

double Scene::initialTau() const {
  SlotLayout layout{dim, graph.vertexOrbits};
  int slot = layout.parse(tauSlots.front());
  int k = slot - dim * layout.numVertices();
  return lattice.generators(k / dim, k % dim);
}

Scene parse_scene_json(const json& j) {
  if (!j.is_object()) throw SceneError("scene must be a JSON object");
  reject_unknown(j,
                 {"schema", "name", "dim", "vertices", "edges", "lattice", "controls",
                  "contacts", "radius", "contact_cables", "solver", "provenance"},
                 "scene");
  if (as_string(require(j, "schema", "scene"), "schema") != "tensekit-scene/1")
    throw SceneError("unsupported scene schema (expected tensekit-scene/1)");

  Scene s;
  if (j.contains("name")) s.name = as_string(j["name"], "name");
  s.dim = as_int(require(j, "dim", "scene"), "dim");
  if (s.dim != 2 && s.dim != 3) throw SceneError("dim must be 2 or 3");
  const int d = s.dim;

  const json& latj = require(j, "lattice", "scene");
  if (!latj.is_array() || static_cast<int>(latj.size()) != d)
    throw SceneError("lattice must be an array of " + std::to_string(d) + " rows");
  Mat G(d, d);
  for (int r = 0; r < d; ++r) {
    Vec row = as_vec(latj[r], d, "lattice row");
    G.row(r) = row.transpose();
  }
  if (std::abs(G.determinant()) < 1e-12) throw SceneError("lattice is singular");
  s.lattice = Lattice(d, G);

  // vertices: orbits and translated copies (aliases)
  const json& vertsj = require(j, "vertices", "scene");
  if (!vertsj.is_array() || vertsj.empty())
    throw SceneError("vertices must be a nonempty array");
  std::map<std::string, std::pair<int, IVec>> resolve;  // label -> (orbit, lift)
  std::vector<Vec> orbitCoords;
  for (const json& vj : vertsj) {
    if (!vj.is_object()) throw SceneError("vertex entry must be an object");
    reject_unknown(vj, {"label", "coords", "alias_of", "lift"}, "vertex entry");
    VertexEntry entry;
    entry.label = as_string(require(vj, "label", "vertex entry"), "vertex label");
    if (entry.label.empty() || entry.label.find('.') != std::string::npos)
      throw SceneError("invalid vertex label: '" + entry.label + "'");
    if (resolve.count(entry.label))
      throw SceneError("duplicate vertex label: " + entry.label);
    entry.coords = as_vec(require(vj, "coords", "vertex entry"), d,
                          "coords of " + entry.label);
    if (vj.contains("alias_of")) {
      std::string base = as_string(vj["alias_of"], "alias_of");
      auto it = resolve.find(base);
      if (it == resolve.end() || it->second.first < 0 ||
          !it->second.second.isZero())
        throw SceneError("alias_of must name an earlier orbit vertex: " + base);
      entry.aliasOf = it->second.first;
      entry.aliasLift = as_ivec(require(vj, "lift", "alias vertex"), d,
                                "lift of " + entry.label);
      Vec derived = orbitCoords[entry.aliasOf] +
                    s.lattice.generators * entry.aliasLift.cast<double>();
      if ((derived - entry.coords).norm() > 1e-9)
        throw SceneError("alias coords of " + entry.label +
                         " do not match base + lattice * lift");
      resolve[entry.label] = {entry.aliasOf, entry.aliasLift};
    } else {
      if (vj.contains("lift"))
        throw SceneError("lift without alias_of on vertex " + entry.label);
      int orbit = static_cast<int>(s.graph.vertexOrbits.size());
      s.graph.vertexOrbits.push_back(entry.label);
      orbitCoords.push_back(entry.coords);
      resolve[entry.label] = {orbit, IVec::Zero(d)};
    }
    s.vertices.push_back(std::move(entry));
  }
  s.graph.dim = d;
  s.placement.coords.resize(d, static_cast<int>(orbitCoords.size()));
  for (size_t v = 0; v < orbitCoords.size(); ++v)
    s.placement.coords.col(static_cast<int>(v)) = orbitCoords[v];

  const json& edgesj = require(j, "edges", "scene");
  if (!edgesj.is_array()) throw SceneError("edges must be an array");
  for (const json& ej : edgesj) {
    if (!ej.is_object()) throw SceneError("edge entry must be an object");
    reject_unknown(ej, {"i", "j", "lift", "kind", "length", "rest", "stiffness"},
                   "edge entry");
    std::string li = as_string(require(ej, "i", "edge"), "edge i");
    std::string lj = as_string(require(ej, "j", "edge"), "edge j");
    auto iti = resolve.find(li);
    auto itj = resolve.find(lj);
    if (iti == resolve.end()) throw SceneError("edge references unknown vertex " + li);
    if (itj == resolve.end()) throw SceneError("edge references unknown vertex " + lj);
    IVec rawLift = ej.contains("lift")
                       ? as_ivec(ej["lift"], d, "edge lift")
                       : IVec::Zero(d);
    Edge e;
    e.i = iti->second.first;
    e.j = itj->second.first;
    // fold alias offsets so the quotient edge realizes the same segment
    e.lift = itj->second.second + rawLift - iti->second.second;
    std::string kind = as_string(require(ej, "kind", "edge"), "edge kind");
    if (kind == "bar") {
      if (ej.contains("rest") || ej.contains("stiffness"))
        throw SceneError("bar edge with cable parameters");
      e.kind = BarKind{as_number(require(ej, "length", "bar edge"), "bar length")};
    } else if (kind == "cable") {
      if (ej.contains("length")) throw SceneError("cable edge with bar length");
      e.kind = CableKind{as_number(require(ej, "rest", "cable edge"), "cable rest"),
                         as_number(require(ej, "stiffness", "cable edge"),
                                   "cable stiffness")};
    } else {
      throw SceneError("edge kind must be 'bar' or 'cable'");
    }
    s.graph.edges.push_back(std::move(e));
  }
  validate_graph(s.graph);

  // control split
  const json& controlsj = require(j, "controls", "scene");
  reject_unknown(controlsj, {"tau", "pinned"}, "controls");
  SlotLayout layout{d, s.graph.vertexOrbits};
  const json& tauj = require(controlsj, "tau", "controls");
  if (!tauj.is_array() || tauj.empty())
    throw SceneError("controls.tau must be a nonempty array of lattice slots");
  std::set<int> tauSet, pinnedSet;
  double tau0 = 0;
  bool first = true;
  for (const json& t : tauj) {
    std::string name = as_string(t, "tau slot");
    int slot = layout.parse(name);
    if (!layout.isLatticeSlot(slot))
      throw SceneError("tau slot must be a lattice entry: " + name);
    if (!tauSet.insert(slot).second) throw SceneError("duplicate tau slot " + name);
    int k = slot - d * layout.numVertices();
    double stored = s.lattice.generators(k / d, k % d);
    if (first) {
      tau0 = stored;
      first = false;
    } else if (std::abs(stored - tau0) > 1e-12) {
      throw SceneError("tau-tied lattice entries disagree in the initial lattice");
    }
    s.tauSlots.push_back(name);
  }
  if (controlsj.contains("pinned")) {
    if (!controlsj["pinned"].is_array())
      throw SceneError("controls.pinned must be an array");
    for (const json& p : controlsj["pinned"]) {
      std::string name = as_string(p, "pinned slot");
      int slot = layout.parse(name);
      if (tauSet.count(slot))
        throw SceneError("slot both pinned and tau-tied: " + name);
      if (!pinnedSet.insert(slot).second)
        throw SceneError("duplicate pinned slot " + name);
      s.pinnedSlots.push_back(name);
    }
  }
  std::sort(s.tauSlots.begin(), s.tauSlots.end());
  std::sort(s.pinnedSlots.begin(), s.pinnedSlots.end());
  if (layout.total() - static_cast<int>(tauSet.size() + pinnedSet.size()) < 1)
    throw SceneError("control split leaves no internal slots");

  // contacts
  if (j.contains("contacts")) {
    if (!j["contacts"].is_array()) throw SceneError("contacts must be an array");
    std::set<int> seen;
    for (const json& c : j["contacts"]) {
      int idx = as_int(c, "contact index");
      if (idx < 0 || idx >= static_cast<int>(s.graph.edges.size()))
        throw SceneError("contact index out of range: " + std::to_string(idx));
      if (!s.graph.edges[idx].is_bar())
        throw SceneError("contact edge " + std::to_string(idx) + " is not a bar");
      if (!seen.insert(idx).second)
        throw SceneError("duplicate contact index " + std::to_string(idx));
      s.contacts.push_back(idx);
    }
    std::sort(s.contacts.begin(), s.contacts.end());
  }
  if (!s.contacts.empty()) {
    double r = as_number(require(j, "radius", "scene with contacts"), "radius");
    if (r <= 0) throw SceneError("radius must be positive");
    s.radius = r;
    // each contact vertex carries exactly two cables and one bar
    std::set<int> contactVertices;
    for (int ci : s.contacts) {
      contactVertices.insert(s.graph.edges[ci].i);
      contactVertices.insert(s.graph.edges[ci].j);
    }
    for (int v : contactVertices) {
      int cables = 0, bars = 0;
      for (const auto& e : s.graph.edges) {
        int mult = (e.i == v) + (e.j == v);
        (e.is_bar() ? bars : cables) += mult;
      }
      if (cables != 2 || bars != 1)
        throw SceneError("contact vertex " + s.graph.vertexOrbits[v] +
                         " must have exactly two cables and one bar, has " +
                         std::to_string(cables) + " cables and " +
                         std::to_string(bars) + " bars");
      for (int axis = 0; axis < d; ++axis)
        if (pinnedSet.count(layout.vertexSlot(v, axis)))
          throw SceneError("contact vertex " + s.graph.vertexOrbits[v] +
                           " cannot be pinned");
    }
  } else if (j.contains("radius")) {
    throw SceneError("radius given but the scene has no contacts");
  }

  if (j.contains("contact_cables")) {
    if (s.contacts.empty())
      throw SceneError("contact_cables given but the scene has no contacts");
    const json& cc = j["contact_cables"];
    reject_unknown(cc, {"incoming", "internal"}, "contact_cables");
    if (cc.contains("incoming")) {
      reject_unknown(cc["incoming"], {"rest", "stiffness"}, "contact_cables.incoming");
      if (cc["incoming"].contains("rest"))
        s.contactCables.incomingRest = as_number(cc["incoming"]["rest"], "incoming rest");
      if (cc["incoming"].contains("stiffness"))
        s.contactCables.incomingStiffness =
            as_number(cc["incoming"]["stiffness"], "incoming stiffness");
    }
    if (cc.contains("internal")) {
      reject_unknown(cc["internal"], {"rest", "stiffness"}, "contact_cables.internal");
      if (cc["internal"].contains("rest"))
        s.contactCables.internalRest = as_number(cc["internal"]["rest"], "internal rest");
      if (cc["internal"].contains("stiffness"))
        s.contactCables.internalStiffness =
            as_number(cc["internal"]["stiffness"], "internal stiffness");
    }
  }
  if (!s.contacts.empty()) {
    if (s.contactCables.internalRest < 0)
      s.contactCables.internalRest = 2.0 * s.radius;
    if (s.contactCables.incomingRest < 0 || s.contactCables.incomingStiffness <= 0 ||
        s.contactCables.internalStiffness <= 0)
      throw SceneError("contact cable parameters out of range");
  }

  if (j.contains("solver")) {
    const json& solver = j["solver"];
    reject_unknown(solver, {"descent", "tracker"}, "solver");
    if (solver.contains("descent")) {
      const json& ds = solver["descent"];
      reject_unknown(ds,
                     {"armijo_factor", "backtrack_ratio", "initial_step", "grad_tol",
                      "max_iters"},
                     "solver.descent");
      if (ds.contains("armijo_factor"))
        s.descent.armijoFactor = as_number(ds["armijo_factor"], "armijo_factor");
      if (ds.contains("backtrack_ratio"))
        s.descent.backtrackRatio = as_number(ds["backtrack_ratio"], "backtrack_ratio");
      if (ds.contains("initial_step"))
        s.descent.initialStep = as_number(ds["initial_step"], "initial_step");
      if (ds.contains("grad_tol")) s.descent.gradTol = as_number(ds["grad_tol"], "grad_tol");
      if (ds.contains("max_iters")) s.descent.maxIters = as_int(ds["max_iters"], "max_iters");
      if (s.descent.armijoFactor <= 0 || s.descent.armijoFactor >= 1 ||
          s.descent.backtrackRatio <= 0 || s.descent.backtrackRatio >= 1 ||
          s.descent.initialStep <= 0 || s.descent.gradTol <= 0 || s.descent.maxIters < 1)
        throw SceneError("solver.descent settings out of range");
    }
    if (solver.contains("tracker")) {
      const json& ts = solver["tracker"];
      reject_unknown(ts,
                     {"newton_tol", "max_newton_iters", "max_subdivisions",
                      "condition_limit"},
                     "solver.tracker");
      if (ts.contains("newton_tol"))
        s.tracker.newtonTol = as_number(ts["newton_tol"], "newton_tol");
      if (ts.contains("max_newton_iters"))
        s.tracker.maxNewtonIters = as_int(ts["max_newton_iters"], "max_newton_iters");
      if (ts.contains("max_subdivisions"))
        s.tracker.maxSubdivisions = as_int(ts["max_subdivisions"], "max_subdivisions");
      if (ts.contains("condition_limit"))
        s.tracker.conditionLimit = as_number(ts["condition_limit"], "condition_limit");
      if (s.tracker.newtonTol <= 0 || s.tracker.maxNewtonIters < 1 ||
          s.tracker.maxSubdivisions < 0 || s.tracker.conditionLimit <= 0)
        throw SceneError("solver.tracker settings out of range");
    }
  }

  if (j.contains("provenance")) s.provenance = j["provenance"];

  s.canonical = serialize_scene(s).dump();
  s.hash = fnv1a(s.canonical);
  return s;
}

Scene parse_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SceneError("scene file " + path + ": " + e.what());
  }
  try {
    return parse_scene_json(j);
  } catch (SceneError& e) {
    throw SceneError(path + ": " + e.what());
  }
}

json serialize_scene(const Scene& s) {
  json j;
  j["schema"] = "tensekit-scene/1";
  if (!s.name.empty()) j["name"] = s.name;
  j["dim"] = s.dim;
  json latj = json::array();
  for (int r = 0; r < s.dim; ++r) {
    json row = json::array();
    for (int c = 0; c < s.dim; ++c) row.push_back(s.lattice.generators(r, c));
    latj.push_back(row);
  }
  j["lattice"] = latj;

  json vertsj = json::array();
  for (const auto& v : s.vertices) {
    json vj;
    vj["label"] = v.label;
    json coords = json::array();
    for (int k = 0; k < s.dim; ++k) coords.push_back(v.coords[k]);
    vj["coords"] = coords;
    if (v.aliasOf >= 0) {
      vj["alias_of"] = s.graph.vertexOrbits[v.aliasOf];
      json lift = json::array();
      for (int k = 0; k < s.dim; ++k) lift.push_back(v.aliasLift[k]);
      vj["lift"] = lift;
    }
    vertsj.push_back(vj);
  }
  j["vertices"] = vertsj;

  json edgesj = json::array();
  for (const auto& e : s.graph.edges) {
    json ej;
    ej["i"] = s.graph.vertexOrbits[e.i];
    ej["j"] = s.graph.vertexOrbits[e.j];
    json lift = json::array();
    for (int k = 0; k < s.dim; ++k) lift.push_back(e.lift[k]);
    ej["lift"] = lift;
    if (e.is_bar()) {
      ej["kind"] = "bar";
      ej["length"] = e.bar().length;
    } else {
      ej["kind"] = "cable";
      ej["rest"] = e.cable().rest;
      ej["stiffness"] = e.cable().stiffness;
    }
    edgesj.push_back(ej);
  }
  j["edges"] = edgesj;

  j["controls"] = {{"tau", s.tauSlots}, {"pinned", s.pinnedSlots}};

  if (!s.contacts.empty()) {
    j["contacts"] = s.contacts;
    j["radius"] = s.radius;
    j["contact_cables"] = {
        {"incoming",
         {{"rest", s.contactCables.incomingRest},
          {"stiffness", s.contactCables.incomingStiffness}}},
        {"internal",
         {{"rest", s.contactCables.internalRest},
          {"stiffness", s.contactCables.internalStiffness}}}};
  }
  j["solver"] = {
      {"descent",
       {{"armijo_factor", s.descent.armijoFactor},
        {"backtrack_ratio", s.descent.backtrackRatio},
        {"initial_step", s.descent.initialStep},
        {"grad_tol", s.descent.gradTol},
        {"max_iters", s.descent.maxIters}}},
      {"tracker",
       {{"newton_tol", s.tracker.newtonTol},
        {"max_newton_iters", s.tracker.maxNewtonIters},
        {"max_subdivisions", s.tracker.maxSubdivisions},
        {"condition_limit", s.tracker.conditionLimit}}}};
  if (!s.provenance.is_null()) j["provenance"] = s.provenance;
  return j;
}

}  // namespace tensekit
