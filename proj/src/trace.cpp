#include "tensekit/trace.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace tensekit {

namespace {

using nlohmann::json;

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::uint64_t parse_hash(const std::string& s, const std::string& path) {
  if (s.size() != 16 ||
      s.find_first_not_of("0123456789abcdef") != std::string::npos)
    throw IoError("malformed scene_hash in " + path);
  return std::stoull(s, nullptr, 16);
}

const char* kAxes[3] = {"x", "y", "z"};

std::string header_line(const TraceMeta& meta) {
  std::ostringstream os;
  os << "tau";
  for (int i = 1; i <= meta.dim; ++i)
    for (int j = 1; j <= meta.dim; ++j) os << ",c" << i << j;
  os << ",energy,residual_norm,grad_norm";
  for (const auto& label : meta.vertexLabels)
    for (int a = 0; a < meta.dim; ++a) os << ",vertex." << label << "." << kAxes[a];
  for (int k = 1; k <= meta.multipliers; ++k) os << ",lam_" << k;
  return os.str();
}

json meta_json(const TraceMeta& m) {
  return json{{"schema", "tensekit-trace/1"},
              {"scene", m.sceneName},
              {"scene_hash", hash_hex(m.sceneHash)},
              {"dim", m.dim},
              {"tau_start", m.tauStart},
              {"tau_end", m.tauEnd},
              {"step", m.step},
              {"tracker",
               {{"newton_tol", m.tracker.newtonTol},
                {"max_newton_iters", m.tracker.maxNewtonIters},
                {"max_subdivisions", m.tracker.maxSubdivisions},
                {"condition_limit", m.tracker.conditionLimit}}}};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

double parse_num(const std::string& tok, const std::string& path, int lineNo) {
  double v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw IoError("bad numeric field '" + tok + "' at line " +
                  std::to_string(lineNo) + " of " + path);
  return v;
}

}  // namespace

TraceWriter::TraceWriter(const std::string& path, const TraceMeta& meta)
    : path_(path), tmpPath_(path + ".tmp"), meta_(meta) {
  if (meta.dim < 2 || meta.dim > 3)
    throw IoError("trace dimension must be 2 or 3");
  if (meta.multipliers < 0) throw IoError("negative multiplier count");
  for (const auto& label : meta.vertexLabels)
    if (label.empty() || label.find_first_of(",.\r\n") != std::string::npos)
      throw IoError("vertex label unusable in a trace header: '" + label + "'");
  out_.open(tmpPath_, std::ios::trunc);
  if (!out_) throw IoError("cannot open " + tmpPath_ + " for writing");
  out_ << "# " << meta_json(meta).dump() << "\n" << header_line(meta) << "\n";
  out_.flush();
  if (!out_) throw IoError("write failed on " + tmpPath_);
}

TraceWriter::~TraceWriter() {
  if (!finished_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmpPath_, ec);
  }
}

void TraceWriter::write_step(const TraceStep& step) {
  if (finished_) throw IoError("trace file already finished");
  const int d = meta_.dim;
  const int nv = static_cast<int>(meta_.vertexLabels.size());
  if (step.lattice.rows() != d || step.lattice.cols() != d ||
      step.coords.rows() != d || step.coords.cols() != nv ||
      step.lambda.size() != meta_.multipliers)
    throw IoError("trace step does not match the header");
  std::ostringstream os;
  os << format_double(step.tau);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) os << ',' << format_double(step.lattice(i, j));
  os << ',' << format_double(step.energy) << ','
     << format_double(step.residualNorm) << ',' << format_double(step.gradNorm);
  for (int v = 0; v < nv; ++v)
    for (int a = 0; a < d; ++a) os << ',' << format_double(step.coords(a, v));
  for (int k = 0; k < meta_.multipliers; ++k)
    os << ',' << format_double(step.lambda[k]);
  out_ << os.str() << "\n";
  out_.flush();
  if (!out_) throw IoError("write failed on " + tmpPath_);
}

void TraceWriter::finish() {
  if (finished_) return;
  out_.close();
  if (out_.fail()) throw IoError("close failed on " + tmpPath_);
  std::error_code ec;
  std::filesystem::rename(tmpPath_, path_, ec);
  if (ec) throw IoError("cannot move " + tmpPath_ + " to " + path_);
  finished_ = true;
}

void write_trace(const std::string& path, const DeformationTrace& trace) {
  TraceWriter w(path, trace.meta);
  for (const auto& s : trace.steps) w.write_step(s);
  w.finish();
}

DeformationTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#')
    throw IoError("missing metadata line in " + path);
  json mj;
  try {
    mj = json::parse(line.substr(1));
  } catch (const json::exception&) {
    throw IoError("metadata line is not valid JSON in " + path);
  }

  DeformationTrace tr;
  try {
    if (mj.at("schema").get<std::string>() != "tensekit-trace/1")
      throw IoError("unsupported trace schema in " + path);
    tr.meta.sceneName = mj.at("scene").get<std::string>();
    tr.meta.sceneHash = parse_hash(mj.at("scene_hash").get<std::string>(), path);
    tr.meta.dim = mj.at("dim").get<int>();
    tr.meta.tauStart = mj.at("tau_start").get<double>();
    tr.meta.tauEnd = mj.at("tau_end").get<double>();
    tr.meta.step = mj.at("step").get<double>();
    const json& tk = mj.at("tracker");
    tr.meta.tracker.newtonTol = tk.at("newton_tol").get<double>();
    tr.meta.tracker.maxNewtonIters = tk.at("max_newton_iters").get<int>();
    tr.meta.tracker.maxSubdivisions = tk.at("max_subdivisions").get<int>();
    tr.meta.tracker.conditionLimit = tk.at("condition_limit").get<double>();
  } catch (const json::exception& e) {
    throw IoError("bad trace metadata in " + path + ": " + e.what());
  }
  const int d = tr.meta.dim;
  if (d < 2 || d > 3) throw IoError("trace dimension must be 2 or 3");
  if (!(tr.meta.step > 0)) throw IoError("nonpositive step in " + path);

  if (!std::getline(in, line)) throw IoError("missing header line in " + path);
  std::vector<std::string> tok = split_csv(line);
  std::size_t pos = 0;
  auto expect = [&](const std::string& want) {
    if (pos >= tok.size() || tok[pos] != want)
      throw IoError("trace header mismatch in " + path + ": expected '" + want +
                    "', got '" + (pos < tok.size() ? tok[pos] : "<end>") + "'");
    ++pos;
  };
  expect("tau");
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j)
      expect("c" + std::to_string(i) + std::to_string(j));
  expect("energy");
  expect("residual_norm");
  expect("grad_norm");
  while (pos < tok.size() && tok[pos].rfind("vertex.", 0) == 0) {
    const std::string& first = tok[pos];
    std::size_t tail = first.rfind('.');
    std::string label = first.substr(7, tail - 7);
    if (label.empty() || tail <= 7)
      throw IoError("malformed vertex column '" + first + "' in " + path);
    for (int a = 0; a < d; ++a) expect("vertex." + label + "." + kAxes[a]);
    tr.meta.vertexLabels.push_back(label);
  }
  int nlam = 0;
  while (pos < tok.size()) {
    expect("lam_" + std::to_string(nlam + 1));
    ++nlam;
  }
  tr.meta.multipliers = nlam;
  const int nv = static_cast<int>(tr.meta.vertexLabels.size());
  const std::size_t fields = 1 + d * d + 3 + d * nv + nlam;

  const double direction = tr.meta.tauEnd > tr.meta.tauStart ? 1.0 : -1.0;
  int lineNo = 2;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) {
      if (in.peek() == std::ifstream::traits_type::eof()) break;
      throw IoError("blank line " + std::to_string(lineNo) + " in " + path);
    }
    std::vector<std::string> f = split_csv(line);
    if (f.size() != fields)
      throw IoError("row with " + std::to_string(f.size()) + " fields, expected " +
                    std::to_string(fields) + ", at line " +
                    std::to_string(lineNo) + " of " + path);
    TraceStep s;
    std::size_t c = 0;
    s.tau = parse_num(f[c++], path, lineNo);
    s.lattice.resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s.lattice(i, j) = parse_num(f[c++], path, lineNo);
    s.energy = parse_num(f[c++], path, lineNo);
    s.residualNorm = parse_num(f[c++], path, lineNo);
    s.gradNorm = parse_num(f[c++], path, lineNo);
    s.coords.resize(d, nv);
    for (int v = 0; v < nv; ++v)
      for (int a = 0; a < d; ++a) s.coords(a, v) = parse_num(f[c++], path, lineNo);
    s.lambda.resize(nlam);
    for (int k = 0; k < nlam; ++k) s.lambda[k] = parse_num(f[c++], path, lineNo);
    s.reducedMinEig = std::numeric_limits<double>::quiet_NaN();
    if (!tr.steps.empty() &&
        direction * (s.tau - tr.steps.back().tau) <= 0)
      throw IoError("stretch values not strictly monotone at line " +
                    std::to_string(lineNo) + " of " + path);
    tr.steps.push_back(std::move(s));
  }
  tr.complete = !tr.steps.empty() &&
                std::abs(tr.steps.back().tau - tr.meta.tauEnd) <= tr.meta.step / 2;
  return tr;
}

}  // namespace tensekit
