#include "doctest.h"
#include "cli.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "latflow");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  return latflow::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("latflow_cli_" + name);
  fs::remove_all(p);
  return p;
}

} // namespace

TEST_CASE("solve-global writes results and a manifest") {
  const fs::path dir = scratch("global");
  CHECK(run({"--out", dir.string(), "--seed", "1", "solve-global", "--n", "4", "--dist",
             "constant:1"}) == 0);
  for (const char *f : {"solve-global.csv", "summary.json", "environment.txt", "flow.txt",
                        "manifest.json"})
    CHECK(fs::exists(dir / f));
  const auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(man["subcommand"] == "solve-global");
  CHECK(man["exit_code"] == 0);
  CHECK(man["outputs"].contains("flow.txt"));
}

TEST_CASE("configuration errors exit with 1") {
  const fs::path dir = scratch("errors");
  CHECK(run({"--out", dir.string(), "--seed", "1", "solve-global", "--n", "4", "--b", "0.2"}) == 1);
  CHECK(run({"--out", dir.string(), "solve-global", "--n", "4"}) == 1);
  CHECK(run({"--out", dir.string(), "--seed", "1", "assemble", "--n", "8", "--m", "3"}) == 1);
  CHECK(run({"--out", dir.string(), "--seed", "1", "solve-global", "--n", "4", "--dist",
             "beta:2"}) == 1);
  CHECK(run({"--out", dir.string()}) == 1);
}

TEST_CASE("non-convergence exits with 2") {
  const fs::path dir = scratch("iters");
  CHECK(run({"--out", dir.string(), "--seed", "1", "solve-global", "--n", "4", "--b", "0.3",
             "--max-iter", "1"}) == 2);
  CHECK(fs::exists(dir / "solve-global.csv"));
}

TEST_CASE("solve-local reads its measure from a file") {
  const fs::path dir = scratch("local");
  fs::create_directories(dir);
  std::ofstream(dir / "q.txt") << "latflow-transport 1\nm 1\n0 1 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0\n";
  CHECK(run({"--out", (dir / "out").string(), "--seed", "2", "solve-local", "--m", "1", "--b",
             "2", "--q", (dir / "q.txt").string(), "--oracle"}) == 0);
  CHECK(fs::exists(dir / "out" / "solve-local.csv"));
}

TEST_CASE("repeated runs give byte-identical results") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const auto &d : {a, b})
    CHECK(run({"--out", d.string(), "--seed", "5", "b-sweep", "--n", "4", "--b-list", "0.3",
               "0.5", "--n-env", "2"}) == 0);
  for (const auto &e : fs::directory_iterator(a))
    if (e.path().filename() != "manifest.json")
      CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
}
