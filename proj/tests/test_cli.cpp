#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string tool = SCT_TOOL;
const std::string data = SCT_DATA_DIR;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sctool_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = tool + " " + args + " > " + (log / "stdout.txt").string() + " 2> " +
                          (log / "stderr.txt").string();
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("analyze exit codes on the small sets") {
  const auto dir = scratch("analyze");
  CHECK(run("analyze --system " + data + "/staggered_center.json --out " + dir.string(), dir) == 0);
  CHECK(slurp(dir / "analysis.json").find("SCHEDULABLE") != std::string::npos);
  CHECK(slurp(dir / "stdout.txt") == "analyze: SCHEDULABLE\n");

  CHECK(run("analyze --system " + data + "/staggered_left.json --out " + dir.string(), dir) == 1);

  CHECK(run("analyze --system " + data + "/offset_pair.json --out " + dir.string(), dir) == 1);
  const auto report = slurp(dir / "analysis.json");
  CHECK(report.find("REJECTED") != std::string::npos);
  CHECK(report.find("\"witness\"") != std::string::npos);
}

TEST_CASE("usage and input errors exit with 2") {
  const auto dir = scratch("errors");
  CHECK(run("", dir) == 2);
  CHECK(run("frobnicate", dir) == 2);
  CHECK(run("analyze --system /no/such.json", dir) == 2);
  std::ofstream(dir / "bad.json") << "{\"schema_version\": ";
  CHECK(run("analyze --system " + (dir / "bad.json").string() + " --out " + dir.string(), dir) == 2);
  std::ofstream(dir / "v9.json") << "{\"schema_version\": 9}";
  CHECK(run("validate --system " + (dir / "v9.json").string() + " --out " + dir.string(), dir) == 2);
  CHECK(slurp(dir / "stderr.txt").find("schema") != std::string::npos);
  CHECK(run("analyze --system " + data + "/staggered_center.json --resolution 1000 --out " + dir.string(), dir) == 2);
  CHECK(run("synthesize --system " + data + "/staggered_center.json --strategy sideways", dir) == 2);
}

TEST_CASE("generate is reproducible per seed") {
  const auto a = scratch("gen_a"), b = scratch("gen_b"), c = scratch("gen_c");
  REQUIRE(run("generate --seed 7 --out " + a.string(), a) == 0);
  REQUIRE(run("generate --seed 7 --out " + b.string(), b) == 0);
  REQUIRE(run("generate --seed 8 --out " + c.string(), c) == 0);
  CHECK(slurp(a / "system.json") == slurp(b / "system.json"));
  CHECK(slurp(a / "system.json") != slurp(c / "system.json"));
}

TEST_CASE("synthesize, simulate and opportunistic on the case study") {
  const auto dir = scratch("pipeline");
  const auto d = dir.string();
  REQUIRE(run("generate --case-study --seed 7 --out " + d, dir) == 0);
  REQUIRE(run("validate --system " + d + "/system.json --out " + d, dir) == 0);
  for (const char* strategy : {"network-first", "ecu-first"}) {
    CAPTURE(strategy);
    REQUIRE(run("synthesize --strategy " + std::string(strategy) + " --system " + d + "/system.json --out " + d, dir) == 0);
    const auto first = slurp(dir / "solution.json");
    REQUIRE(run("synthesize --strategy " + std::string(strategy) + " --system " + d + "/system.json --out " + d, dir) == 0);
    CHECK(slurp(dir / "solution.json") == first);
    CHECK(run("analyze --system " + d + "/solved_system.json --out " + d, dir) == 0);
    CHECK(run("simulate --system " + d + "/solved_system.json --out " + d, dir) == 0);
    CHECK(slurp(dir / "stdout.txt") == "simulate: 0 misses\n");
    CHECK(slurp(dir / "trace.csv").rfind("resource,time,task,job,event\n", 0) == 0);
  }
  CHECK(run("opportunistic --system " + d + "/solved_system.json --config " + data + "/opportunistic.json --curves " +
                data + "/qoc_curves.json --out " + d,
            dir) == 0);
  const auto opp = slurp(dir / "opportunistic.json");
  CHECK(opp.find("\"periodic_misses\": 0") != std::string::npos);
  CHECK(opp.find("bus_utilization_delta") != std::string::npos);
}

TEST_CASE("export-lp and qoc-estimate") {
  const auto dir = scratch("lp");
  const auto d = dir.string();
  std::ofstream(dir / "small.json") << R"({"schema_version": 1, "ticks_per_unit": 1,
    "ecus": [{"id": "E1", "tasks": ["a", "b"]}],
    "background": [{"id": "a", "kind": "background", "c_reg": 2, "c_ext": 4, "p": 10, "l": 2},
                   {"id": "b", "kind": "background", "c_reg": 5, "p": 20}]})";
  REQUIRE(run("export-lp --system " + d + "/small.json --out " + d, dir) == 0);
  CHECK(slurp(dir / "system.lp").find("Subject To") != std::string::npos);

  REQUIRE(run("qoc-estimate --plants " + data + "/plants.json --plant scalar --l-max 3 --samples 3 --horizon 60 --out " + d,
              dir) == 0);
  const auto first = slurp(dir / "qoc_estimate.json");
  CHECK(first.find("\"scalar\"") != std::string::npos);
  REQUIRE(run("qoc-estimate --plants " + data + "/plants.json --plant scalar --l-max 3 --samples 3 --horizon 60 --out " + d,
              dir) == 0);
  CHECK(slurp(dir / "qoc_estimate.json") == first);
  CHECK(run("qoc-estimate --plants " + data + "/plants.json --plant none --out " + d, dir) == 2);
}
