#include "doctest.h"
#include "latflow/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace latflow;

TEST_CASE("doubles round-trip in shortest form") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(kNA) == "NA");
  CHECK(std::isnan(parse_double("NA")));
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5})
    CHECK(parse_double(format_double(x)) == x);
}

TEST_CASE("environment files round-trip") {
  const Environment e = sample_torus_env(4, CostDistribution::uniform(2.0), 8);
  std::stringstream ss;
  write_environment(ss, e);
  CHECK(ss.str().rfind("latflow-environment 1", 0) == 0);
  const Environment back = read_environment(ss);
  CHECK(back.cost() == e.cost());
  CHECK(back.c_star() == 2.0);
  CHECK(back.seed() == 8);
  CHECK(back.size() == 4);
}

TEST_CASE("flow and transport files round-trip") {
  FlowFile f{EnvironmentKind::Square, 2, FlowVolume::LinSpaced(12, 0.0, 1.1)};
  std::stringstream ss;
  write_flow(ss, f);
  const FlowFile g = read_flow(ss);
  CHECK(g.volume == f.volume);
  CHECK(g.kind == EnvironmentKind::Square);

  TransportMeasure q = directional(2, Direction::Up);
  q.mass(0, 3) = 0.125;
  std::stringstream tq;
  write_transport(tq, q);
  CHECK(read_transport(tq).mass == q.mass);
}

TEST_CASE("malformed input is rejected") {
  std::stringstream bad("latflow-flow 2\n");
  CHECK_THROWS(read_flow(bad));
  std::stringstream trunc("latflow-transport 1\nm 1\n1 2 3\n");
  CHECK_THROWS(read_transport(trunc));
}

TEST_CASE("csv has the core columns then extras in first-seen order") {
  // M = 0 means not applicable and is written as NA.
  ResultRow a;
  a.experiment = "x";
  a.n = 4;
  a.objective = 1.5;
  a.extra = {{"k1", 1.0}};
  ResultRow b = a;
  b.extra = {{"k2", 2.0}, {"k1", 3.0}};
  std::stringstream ss;
  write_csv(ss, {a, b});
  std::string header, r1, r2;
  std::getline(ss, header);
  std::getline(ss, r1);
  std::getline(ss, r2);
  CHECK(header == "experiment,N,M,B,p,seed,objective,gap,residual,walltime,k1,k2");
  CHECK(r1 == "x,4,NA,NA,NA,0,1.5,NA,NA,NA,1,NA");
  CHECK(r2 == "x,4,NA,NA,NA,0,1.5,NA,NA,NA,3,2");
}

TEST_CASE("summary json and hashes") {
  ExperimentReport rep;
  rep.experiment = "t";
  rep.put("z", 1.0);
  rep.put("a", kNA);
  const std::string js = summary_json(rep);
  CHECK(js.find("\"z\"") < js.find("\"a\""));
  CHECK(hash_hex(0xabcULL) == "0000000000000abc");
  const auto path = std::filesystem::temp_directory_path() / "latflow_io_hash.txt";
  std::ofstream(path) << "a";
  CHECK(file_hash(path) == "af63dc4c8601ec8c");
  std::filesystem::remove(path);
}
