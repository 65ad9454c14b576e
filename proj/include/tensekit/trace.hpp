#pragma once

#include <fstream>
#include <string>

#include "tensekit/pipeline.hpp"

namespace tensekit {

// Deformation trace file: one '#'-prefixed metadata JSON line, one header
// line, then one CSV row per accepted step. Columns: tau, the full realized
// generator matrix row-major (c11..cdd), energy, residual_norm, grad_norm,
// every vertex coordinate slot, then the multipliers lam_1..lam_m. Numbers
// use the shortest round-trippable decimal so a rewrite of a parsed trace is
// byte-identical.

// Streaming writer. Rows go to "<path>.tmp" and are flushed as they arrive so
// an interrupted run keeps its prefix; finish() renames the file into place.
// Destruction without finish() discards the temporary.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, const TraceMeta& meta);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write_step(const TraceStep& step);
  void finish();

 private:
  std::string path_, tmpPath_;
  std::ofstream out_;
  TraceMeta meta_;
  bool finished_ = false;
};

void write_trace(const std::string& path, const DeformationTrace& trace);

// Strict parse of a trace file. Vertex labels and the multiplier count come
// from the header; completion is judged by whether the last row reached the
// recorded end of the grid. Internal slot vectors are not reconstructible
// from a file, so steps come back with empty x and an unknown stability
// indicator.
DeformationTrace read_trace(const std::string& path);

}  // namespace tensekit
