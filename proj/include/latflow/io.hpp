#pragma once

// Plain-text artifact formats. Every number is written in its shortest
// round-trip form, so identical inputs give byte-identical files.
//
//   latflow-environment 1       latflow-flow 1          latflow-transport 1
//   kind torus|square           kind torus|square       m <M>
//   size <N or M>               size <N or M>           <4M rows of 4M values>
//   cstar <c*>                  edges <E>
//   seed <seed>                 <E values>
//   dist <spec>
//   edges <E>
//   <E values>

#include "latflow/environment.hpp"
#include "latflow/experiments.hpp"
#include "latflow/flow.hpp"
#include "latflow/transport.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace latflow {

// Shortest round-trip decimal; NaN as NA.
std::string format_double(double x);
double parse_double(const std::string &s);

void write_environment(std::ostream &os, const Environment &env);
Environment read_environment(std::istream &is);

struct FlowFile {
  EnvironmentKind kind = EnvironmentKind::Torus;
  int size = 0;
  FlowVolume volume;
};
void write_flow(std::ostream &os, const FlowFile &f);
FlowFile read_flow(std::istream &is);

void write_transport(std::ostream &os, const TransportMeasure &q);
TransportMeasure read_transport(std::istream &is);

// Core columns experiment,N,M,B,p,seed,objective,gap,residual,walltime, then
// the extra columns in first-seen order.
void write_csv(std::ostream &os, const std::vector<ResultRow> &rows);

// Summary, notes and convergence flag as JSON.
std::string summary_json(const ExperimentReport &rep);

std::string hash_hex(std::uint64_t h);
// FNV-1a 64 of the file bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path &p);

} // namespace latflow
