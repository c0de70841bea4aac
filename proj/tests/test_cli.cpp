#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "nepr/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct WorkDir {
  fs::path path;
  WorkDir() : path(fs::temp_directory_path() / ("nepr-cli-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~WorkDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const fs::path& work() {
  static const WorkDir dir;
  return dir.path;
}

// Runs the tool inside the work directory; returns its exit status.
int cli(const std::string& args) {
  const std::string cmd = "cd '" + work().string() + "' && '" NEPR_CLI "' " + args + " >out.txt 2>err.txt";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string file(const std::string& name) {
  std::ifstream in(work() / name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& name, const std::string& text) { std::ofstream(work() / name, std::ios::binary) << text; }

}  // namespace

TEST_CASE("stage commands chain into the same routing as run") {
  REQUIRE(cli("expand full_adder -o fa.nlc") == 0);
  REQUIRE(cli("gen-layout fa.nlc --seed 3 -o fa.lay") == 0);
  REQUIRE(cli("place fa.nlc fa.lay --seed 3 -o fa.plc") == 0);
  REQUIRE(cli("route fa.nlc fa.lay fa.plc -o fa.rte") == 0);
  CHECK(cli("drc fa.nlc fa.lay fa.plc fa.rte") == 0);
  CHECK(file("out.txt") == "ok\n");

  REQUIRE(cli("run --circuit full_adder --seed 3 --out run3") == 0);
  CHECK(file("run3/routing.rte") == file("fa.rte"));
  CHECK(file("run3/placement.plc") == file("fa.plc"));

  CHECK(cli("metrics fa.nlc fa.lay fa.plc fa.rte --ledger run3/metrics.txt") == 0);
  const auto m = nepr::parse_metrics(file("out.txt"));
  const auto logged = nepr::parse_metrics(file("run3/metrics.txt"));
  CHECK(m.psi_r == logged.psi_r);
  CHECK(m.omega == logged.omega);
  CHECK(m.rt_per_instance == logged.rt_per_instance);

  CHECK(cli("render fa.nlc fa.lay fa.plc fa.rte -o fa.svg") == 0);
  CHECK(file("fa.svg").find("<svg") == 0);
}

TEST_CASE("mismatched artifacts are refused") {
  REQUIRE(cli("run --circuit full_adder --seed 4 --out run4") == 0);
  REQUIRE(cli("run --circuit full_adder --seed 5 --out run5") == 0);
  // Same circuit, another seed's routing.
  CHECK(cli("render run4/circuit.nlc run4/layout.lay run4/placement.plc run5/routing.rte") == 2);
  CHECK(file("err.txt").find("not derived") != std::string::npos);
  CHECK(cli("metrics run4/circuit.nlc run4/layout.lay run4/placement.plc run5/routing.rte") == 2);
  CHECK(cli("metrics run4/circuit.nlc run4/layout.lay run4/placement.plc run4/routing.rte --ledger run5/metrics.txt") == 2);
  CHECK(cli("route run4/circuit.nlc run5/layout.lay run4/placement.plc") == 2);
}

TEST_CASE("drc failures exit with 2") {
  REQUIRE(cli("run --circuit full_adder --seed 6 --out run6") == 0);
  std::string rte = file("run6/routing.rte");
  const auto at = rte.find("\ninsu ");
  REQUIRE(at != std::string::npos);
  rte.erase(at + 1, rte.find('\n', at + 1) - at);
  write("run6/tampered.rte", rte);
  CHECK(cli("drc run6/circuit.nlc run6/layout.lay run6/placement.plc run6/tampered.rte") == 2);
  CHECK(file("out.txt").find("missing-insulator 1") != std::string::npos);
}

TEST_CASE("routing failures exit with 3") {
  REQUIRE(cli("expand full_adder -o fa7.nlc") == 0);
  REQUIRE(cli("gen-layout fa7.nlc -o fa7.lay") == 0);
  REQUIRE(cli("place fa7.nlc fa7.lay -o fa7.plc") == 0);
  // A 5 um lattice cannot separate a transistor's three pins.
  CHECK(cli("route fa7.nlc fa7.lay fa7.plc --grid-g 5 -o coarse.rte") == 3);
  CHECK(file("err.txt").find("failed net") != std::string::npos);
}

TEST_CASE("config problems exit with 4") {
  CHECK(cli("run --approach nonsense") == 4);
  write("bad.json", R"({"blocks": 2, "zzz": 1})");
  CHECK(cli("run --config bad.json") == 4);
  CHECK(cli("run --circuit no_such_thing") == 4);
  CHECK(cli("frobnicate") == 4);
  CHECK(cli("drc missing.nlc a b c") == 4);
}

TEST_CASE("config dump holds every default and feeds back in") {
  REQUIRE(cli("config --dump") == 0);
  const auto dumped = file("out.txt");
  CHECK(dumped == nepr::dump_config({}));
  write("dump.json", dumped);
  REQUIRE(cli("config --dump --config dump.json --seed 9") == 0);
  CHECK(nepr::parse_config(file("out.txt")).seed == 9);
}

TEST_CASE("bench prints the table") {
  REQUIRE(cli("bench --circuits full_adder --approaches small baseline-euclidean --seed-count 2") == 0);
  const auto t = file("out.txt");
  CHECK(t.rfind("circuit\tapproach\tseed", 0) == 0);
  CHECK(t.find("baseline-euclidean") != std::string::npos);
}
