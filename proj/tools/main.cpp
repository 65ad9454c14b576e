#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tensekit/analysis.hpp"
#include "tensekit/check_gradient.hpp"
#include "tensekit/pipeline.hpp"
#include "tensekit/scene.hpp"
#include "tensekit/trace.hpp"

using namespace tensekit;
using nlohmann::json;

namespace {

// exit codes: 0 ok, 2 usage, 3 scene, 4 io, 5 domain/degeneracy,
// 6 solver failure, 10 internal
constexpr int kUsage = 2, kScene = 3, kIo = 4, kDomain = 5, kSolver = 6,
              kInternal = 10;

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void emit_error(const std::string& kind, const std::string& msg,
                const json& extra = json::object()) {
  json j = extra;
  j["schema"] = "tensekit-error/1";
  j["error"] = kind;
  j["message"] = msg;
  std::cerr << j.dump() << "\n";
}

void write_json_atomic(const std::string& path, const json& j) {
  std::string tmp = path + ".tmp";
  std::ofstream out(tmp, std::ios::trunc);
  if (!out) throw IoError("cannot open " + tmp + " for writing");
  out << j.dump(2) << "\n";
  out.close();
  if (out.fail()) throw IoError("write to " + tmp + " failed");
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path + " failed: " + ec.message());
}

json state_json(const Scene& sc, const FrameworkSystem& sys,
                const Equilibrium& eq) {
  Placement p;
  Lattice lat;
  sys.realize(eq.x, eq.tau, p, lat);
  json jlat = json::array();
  for (int r = 0; r < sys.dim(); ++r) {
    json row = json::array();
    for (int c = 0; c < sys.dim(); ++c) row.push_back(lat.generators(r, c));
    jlat.push_back(row);
  }
  json jverts = json::object();
  for (std::size_t v = 0; v < sys.graph().vertexOrbits.size(); ++v) {
    json coords = json::array();
    for (int a = 0; a < sys.dim(); ++a)
      coords.push_back(p.coords(a, static_cast<int>(v)));
    jverts[sys.graph().vertexOrbits[v]] = coords;
  }
  json jlam = json::array();
  for (int i = 0; i < eq.lambda.size(); ++i) jlam.push_back(eq.lambda[i]);
  return json{{"schema", "tensekit-state/1"},
              {"scene", sc.name},
              {"scene_hash", hash_hex(sc.hash)},
              {"tau", eq.tau},
              {"energy", eq.energy},
              {"grad_norm", eq.gradNorm},
              {"residual_norm", eq.residualNorm},
              {"kkt_norm", eq.kktNorm},
              {"descent_iterations", eq.descentIterations},
              {"lattice", jlat},
              {"vertices", jverts},
              {"multipliers", jlam}};
}

int run_equilibrate(const std::string& scenePath, double tau, bool tauSet,
                    const std::string& outPath) {
  Scene sc = parse_scene(scenePath);
  FrameworkSystem sys = build_system(sc);
  double at = tauSet ? tau : sys.seed_tau();
  Equilibrium eq = equilibrate(sys, sys.seed_state(), at, sc.descent, sc.tracker);
  write_json_atomic(outPath, state_json(sc, sys, eq));
  std::printf("equilibrium at tau=%s energy=%s grad_norm=%s kkt_norm=%s -> %s\n",
              format_double(eq.tau).c_str(), format_double(eq.energy).c_str(),
              format_double(eq.gradNorm).c_str(),
              format_double(eq.kktNorm).c_str(), outPath.c_str());
  return 0;
}

int run_deform(const std::string& scenePath, double tauStart, bool startSet,
               double tauEnd, double step, const std::string& outPath) {
  Scene sc = parse_scene(scenePath);
  FrameworkSystem sys = build_system(sc);
  double at = startSet ? tauStart : sys.seed_tau();
  tau_grid(at, tauEnd, step);  // validate the grid before the slow part
  Equilibrium eq = equilibrate(sys, sys.seed_state(), at, sc.descent, sc.tracker);

  TraceMeta meta;
  meta.sceneName = sc.name;
  meta.sceneHash = sc.hash;
  meta.dim = sys.dim();
  meta.vertexLabels = sys.graph().vertexOrbits;
  meta.tauStart = at;
  meta.tauEnd = tauEnd;
  meta.step = step;
  meta.multipliers = sys.m();
  meta.tracker = sc.tracker;

  TraceWriter writer(outPath, meta);
  DeformationTrace tr =
      deform(sys, eq, tauEnd, step, sc.tracker,
             [&](const TraceStep& s) { writer.write_step(s); });
  writer.finish();

  if (!tr.complete) {
    emit_error("no_convergence", tr.failure,
               json{{"last_stable_tau", tr.lastStableTau()},
                    {"rows", tr.steps.size()},
                    {"trace", outPath}});
    return kSolver;
  }
  std::printf("traced tau %s -> %s in %zu steps -> %s\n",
              format_double(at).c_str(), format_double(tauEnd).c_str(),
              tr.steps.size(), outPath.c_str());
  return 0;
}

int run_export_geometry(const std::string& scenePath,
                        const std::string& tracePath,
                        const std::string& outPath) {
  Scene sc = parse_scene(scenePath);
  DeformationTrace tr = read_trace(tracePath);
  if (tr.meta.sceneHash != sc.hash)
    throw SceneError("trace " + tracePath + " was produced from scene '" +
                     tr.meta.sceneName + "', not from " + scenePath);
  SplitFramework sf = tetrahedralize(sc.graph, sc.placement, sc.lattice,
                                     sc.contacts, sc.radius, sc.contactCables);
  if (sf.graph.vertexOrbits != tr.meta.vertexLabels)
    throw SceneError("trace vertex labels do not match the scene's strands");

  int d = tr.meta.dim;
  std::string tmp = outPath + ".tmp";
  std::ofstream out(tmp, std::ios::trunc);
  if (!out) throw IoError("cannot open " + tmp + " for writing");
  const char* ax = "xyz";
  out << "step,tau,edge,kind";
  for (int e = 0; e < 2; ++e)
    for (int a = 0; a < d; ++a) out << "," << ax[a] << e + 1;
  out << "\n";
  for (std::size_t si = 0; si < tr.steps.size(); ++si) {
    const TraceStep& s = tr.steps[si];
    for (std::size_t ei = 0; ei < sf.graph.edges.size(); ++ei) {
      const Edge& e = sf.graph.edges[ei];
      Vec p1 = s.coords.col(e.i);
      Vec p2 = s.coords.col(e.j) + s.lattice * e.lift.cast<double>();
      out << si << "," << format_double(s.tau) << "," << ei << ","
          << (e.is_bar() ? "bar" : "cable");
      for (int a = 0; a < d; ++a) out << "," << format_double(p1[a]);
      for (int a = 0; a < d; ++a) out << "," << format_double(p2[a]);
      out << "\n";
    }
  }
  out.close();
  if (out.fail()) throw IoError("write to " + tmp + " failed");
  std::error_code ec;
  std::filesystem::rename(tmp, outPath, ec);
  if (ec) throw IoError("rename to " + outPath + " failed: " + ec.message());
  std::printf("wrote %zu steps x %zu segments -> %s\n", tr.steps.size(),
              sf.graph.edges.size(), outPath.c_str());
  return 0;
}

int run_analyze(const std::string& tracePath, double lag, double normTol,
                const std::string& outPath, const std::string& plotPath) {
  DeformationTrace tr = read_trace(tracePath);
  AnalysisSettings settings;
  settings.lag = lag;
  settings.normTol = normTol;
  AuxeticityReport rep = analyze_trace(tr, settings);
  write_json_atomic(outPath, report_json(rep));

  if (!plotPath.empty()) {
    std::string tmp = plotPath + ".tmp";
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << "tau,nu_xy,nu_xz,opnorm\n";
    for (std::size_t j = 1; j < rep.tau.size(); ++j) {
      out << format_double(rep.tau[j]) << "," << format_double(rep.nuXy[j - 1])
          << ",";
      if (rep.dim >= 3) out << format_double(rep.nuXz[j - 1]);
      out << ",";
      if (j >= static_cast<std::size_t>(rep.lagSteps))
        out << format_double(rep.pairNorms[j - rep.lagSteps].norm);
      out << "\n";
    }
    out.close();
    if (out.fail()) throw IoError("write to " + tmp + " failed");
    std::error_code ec;
    std::filesystem::rename(tmp, plotPath, ec);
    if (ec) throw IoError("rename to " + plotPath + " failed: " + ec.message());
  }

  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::printf(
      "materials-auxetic: %s, geometric-contraction: %s, certified: %s -> %s\n",
      yn(rep.materialsAuxetic), yn(rep.geometricContraction), yn(rep.certified),
      outPath.c_str());
  return 0;
}

int run_audit(const std::string& scenePath, int samples, unsigned seed,
              double tol) {
  Scene sc = parse_scene(scenePath);
  FrameworkSystem sys = build_system(sc);
  GradientAudit audit = audit_system_gradients(sys, sys.seed_state(),
                                               sys.seed_tau(), samples, seed);
  bool ok = audit.maxResidualError <= tol && audit.maxEnergyError <= tol;
  std::printf(
      "%s: %d samples (%d redrawn near kinks), max residual-jacobian error %s, "
      "max energy-gradient error %s\n",
      sc.name.c_str(), audit.samples, audit.resampled,
      format_double(audit.maxResidualError).c_str(),
      format_double(audit.maxEnergyError).c_str());
  if (!ok) {
    emit_error("gradient_audit",
               "finite-difference mismatch above " + format_double(tol),
               json{{"max_residual_error", audit.maxResidualError},
                    {"max_energy_error", audit.maxEnergyError}});
    return kSolver;
  }
  return 0;
}

// the bundled hexagonal scene, embedded so the demo runs from anywhere
const char* kHoneycombScene = R"JSON({
  "schema": "tensekit-scene/1",
  "name": "honeycomb",
  "dim": 2,
  "lattice": [[1.0, 1.0], [1.0, -1.0]],
  "vertices": [
    {"label": "v1", "coords": [0.0, 0.0]},
    {"label": "v2", "coords": [1.0, 0.0]},
    {"label": "v3", "coords": [1.0, 1.0], "alias_of": "v1", "lift": [1, 0]},
    {"label": "v4", "coords": [1.0, -1.0], "alias_of": "v1", "lift": [0, 1]}
  ],
  "edges": [
    {"i": "v1", "j": "v2", "kind": "bar", "length": 1.0},
    {"i": "v2", "j": "v3", "kind": "bar", "length": 1.0},
    {"i": "v2", "j": "v4", "kind": "bar", "length": 1.0}
  ],
  "controls": {
    "tau": ["lattice.11", "lattice.12"],
    "pinned": ["vertex.v1.x", "vertex.v1.y", "vertex.v2.y"]
  }
})JSON";

int run_demo_honeycomb() {
  Scene sc = parse_scene_json(nlohmann::json::parse(kHoneycombScene));
  FrameworkSystem sys = build_system(sc);
  double step = 5e-3;

  auto trace_range = [&](double from, double to) {
    Equilibrium eq = equilibrate(sys, sys.seed_state(), from, sc.descent,
                                 sc.tracker);
    DeformationTrace tr = deform(sys, eq, to, step, sc.tracker);
    if (!tr.complete)
      throw NoConvergence("demo path stalled: " + tr.failure,
                          tr.lastStableTau());
    return tr;
  };

  // all pairs tau1 < tau2 within one segment of the path
  auto norm_range = [](const DeformationTrace& tr, double lo, double hi,
                       double& minNorm, double& maxNorm) {
    minNorm = std::numeric_limits<double>::infinity();
    maxNorm = 0;
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
      if (tr.steps[i].tau <= lo || tr.steps[i].tau > hi) continue;
      for (std::size_t j = i + 1; j < tr.steps.size(); ++j) {
        if (tr.steps[j].tau <= lo || tr.steps[j].tau > hi) continue;
        double n = operator_norm(transfer_operator(tr.steps[i].lattice,
                                                   tr.steps[i].tau,
                                                   tr.steps[j].lattice,
                                                   tr.steps[j].tau)
                                     .T);
        minNorm = std::min(minNorm, n);
        maxNorm = std::max(maxNorm, n);
      }
    }
  };

  DeformationTrace up = trace_range(0.55, 1.0);
  DeformationTrace over = trace_range(1.0, 1.45);
  double loMin, loMax, hiMin, hiMax;
  norm_range(up, 0.5, 1.0, loMin, loMax);
  norm_range(over, 1.0, 1.5, hiMin, hiMax);

  bool contractingBelow = loMax < 1.0;
  bool expandingAbove = hiMin > 1.0;
  if (contractingBelow && expandingAbove) {
    std::printf("auxetic on (0.5,1], non-auxetic on (1,1.5)\n");
  } else {
    std::printf("unexpected: max |T| below 1.0 is %s, min |T| above is %s\n",
                format_double(loMax).c_str(), format_double(hiMin).c_str());
    return kSolver;
  }
  std::fprintf(stderr,
               "tracked %zu + %zu steps; |T| spans [%s, %s] then [%s, %s]\n",
               up.steps.size(), over.steps.size(), format_double(loMin).c_str(),
               format_double(loMax).c_str(), format_double(hiMin).c_str(),
               format_double(hiMax).c_str());
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"periodic tensegrity equilibria, deformation paths, and "
               "auxeticity analysis"};
  app.require_subcommand(1);

  std::string scenePath, outPath, tracePath;
  double tau = 0, tauStart = 0, tauEnd = 0, step = 0;

  CLI::App* eq = app.add_subcommand(
      "equilibrate", "solve one constrained equilibrium and write a state file");
  eq->add_option("--scene", scenePath, "scene JSON file")->required();
  CLI::Option* tauOpt = eq->add_option("--tau", tau, "stretch parameter value "
                                       "(default: the scene's stored value)");
  eq->add_option("--out", outPath, "output state JSON")->required();

  CLI::App* df = app.add_subcommand(
      "deform", "track the equilibrium along the stretch parameter");
  df->add_option("--scene", scenePath, "scene JSON file")->required();
  CLI::Option* startOpt = df->add_option(
      "--tau-start", tauStart, "start value (default: the scene's stored value)");
  df->add_option("--tau-end", tauEnd, "end value")->required();
  df->add_option("--step", step, "grid step magnitude")->required();
  df->add_option("--out", outPath, "output trace CSV")->required();

  CLI::App* ex = app.add_subcommand(
      "export-geometry", "emit per-step line segments of a trace for plotting");
  ex->add_option("--scene", scenePath, "scene JSON file")->required();
  ex->add_option("--trace", tracePath, "trace CSV from deform")->required();
  ex->add_option("--out", outPath, "output segment CSV")->required();

  double lag = 3e-3, normTol = 1e-6, auditTol = 1e-6;
  std::string plotPath;
  int samples = 100;
  unsigned seed = 1;
  CLI::App* an = app.add_subcommand(
      "analyze", "auxeticity report from a deformation trace");
  an->add_option("--trace", tracePath, "trace CSV from deform")->required();
  an->add_option("--lag", lag, "stretch distance between operator pairs")
      ->capture_default_str();
  an->add_option("--norm-tol", normTol, "contraction slack for the verdicts")
      ->capture_default_str();
  an->add_option("--out", outPath, "output report JSON")->required();
  an->add_option("--plot-data", plotPath, "also write a tau/nu/opnorm CSV");

  CLI::App* au = app.add_subcommand(
      "audit-gradients", "finite-difference audit of a scene's derivatives");
  au->add_option("--scene", scenePath, "scene JSON file")->required();
  au->add_option("--samples", samples, "random sample points")
      ->capture_default_str();
  au->add_option("--seed", seed, "sampling seed")->capture_default_str();
  au->add_option("--tol", auditTol, "maximum relative error")
      ->capture_default_str();

  CLI::App* demo = app.add_subcommand(
      "demo-honeycomb",
      "track the hexagonal path and print its auxeticity verdict");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return kUsage;
  }

  if (eq->parsed())
    return run_equilibrate(scenePath, tau, tauOpt->count() > 0, outPath);
  if (df->parsed())
    return run_deform(scenePath, tauStart, startOpt->count() > 0, tauEnd, step,
                      outPath);
  if (an->parsed()) return run_analyze(tracePath, lag, normTol, outPath, plotPath);
  if (au->parsed()) return run_audit(scenePath, samples, seed, auditTol);
  if (demo->parsed()) return run_demo_honeycomb();
  return run_export_geometry(scenePath, tracePath, outPath);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const SceneError& e) {
    emit_error("scene", e.what());
    return kScene;
  } catch (const IoError& e) {
    emit_error("io", e.what());
    return kIo;
  } catch (const DomainError& e) {
    emit_error("domain", e.what());
    return kDomain;
  } catch (const DegenerateConfiguration& e) {
    emit_error("degenerate_configuration", e.what());
    return kDomain;
  } catch (const SingularJacobian& e) {
    emit_error("singular_jacobian", e.what(), json{{"tau", e.t}});
    return kSolver;
  } catch (const NoConvergence& e) {
    emit_error("no_convergence", e.what(), json{{"tau", e.t}});
    return kSolver;
  } catch (const RankDeficient& e) {
    emit_error("rank_deficient", e.what());
    return kSolver;
  } catch (const MaxIterations& e) {
    emit_error("max_iterations", e.what());
    return kSolver;
  } catch (const Error& e) {
    emit_error("internal", e.what());
    return kInternal;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return kInternal;
  }
}
