#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "nepr/artifacts.hpp"
#include "nepr/pipeline.hpp"
#include "nepr/render.hpp"

using namespace nepr;
using namespace nepr::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("nepr-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> names(const PipelineResult& r) {
  std::vector<std::string> out;
  for (const auto& f : r.files) out.push_back(fs::path(f).filename().string());
  return out;
}

bool has(const std::vector<std::string>& v, const std::string& s) { return std::find(v.begin(), v.end(), s) != v.end(); }

LogicalCircuit four_adders() {
  const auto fa = full_adder();
  return disjoint_union(disjoint_union(fa, fa), disjoint_union(fa, fa));
}

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (auto at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("approach names round trip") {
  for (Approach a : {Approach::small, Approach::large_bfs, Approach::large_astar, Approach::large_astar_semantics,
                     Approach::baseline_euclidean, Approach::baseline_manhattan})
    CHECK(parse_approach(to_string(a)) == a);
  CHECK(to_string(Approach::large_astar) == "large-astar");
  CHECK_THROWS_AS(parse_approach("huge"), ConfigError);
  CHECK(is_large(Approach::large_bfs));
  CHECK_FALSE(is_large(Approach::small));
  CHECK(is_baseline(Approach::baseline_euclidean));
}

TEST_CASE("config dump parses back to the same settings") {
  PipelineConfig c;
  c.circuit = "perceptron";
  c.approach = Approach::large_astar_semantics;
  c.blocks = 9;
  c.seed = 77;
  c.jobs = 3;
  c.deposition.rho = 12.5;
  c.partition.starts = 5;
  c.floorplan.margin = 0.2;
  c.place.iterations = 1000;
  c.virtual_pins = false;
  c.route.grid.g = 2;
  c.route.inter = InterMode::bfs;
  c.route.astar_weight = 2.0;
  c.alpha = 5e3;
  const auto back = parse_config(dump_config(c));
  CHECK(dump_config(back) == dump_config(c));
  CHECK(back.approach == c.approach);
  CHECK(back.route.inter == InterMode::bfs);
  CHECK(back.virtual_pins == false);
  CHECK(back.place.iterations == 1000);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config(R"({"blokcs": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"route": {"weight": 2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"blocks": "four"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"blocks": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"route": {"astar_weight": 0.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  // Missing keys keep the base.
  PipelineConfig base;
  base.seed = 9;
  CHECK(parse_config(R"({"blocks": 2})", base).seed == 9);
}

TEST_CASE("small flow skips partition and floorplan") {
  TempDir dir("small");
  PipelineConfig cfg;
  cfg.out_dir = dir.str();
  const auto r = run_pipeline(cfg);
  const auto files = names(r);
  CHECK(files == std::vector<std::string>{"circuit.nlc", "layout.lay", "placement.plc", "routing.rte", "metrics.txt"});
  CHECK(r.partition.blocks == 1);
  CHECK(r.rt.partition_s == 0);
  CHECK(r.rt.floorplan_s == 0);

  // Each derived file names the hash of what it came from.
  const auto nlc = slurp(dir.path / "circuit.nlc"), lay = slurp(dir.path / "layout.lay"),
             plc = slurp(dir.path / "placement.plc"), rte = slurp(dir.path / "routing.rte");
  CHECK(source_of(lay) == layout_source(nlc));
  CHECK(source_of(plc) == placement_source(nlc, lay, ""));
  CHECK(source_of(rte) == routing_source(nlc, lay, plc));
  const auto m = parse_metrics(slurp(dir.path / "metrics.txt"));
  CHECK(m.source == content_hash(rte));
  CHECK(m.omega == r.metrics.omega);

  // The written artifacts reload to the in-memory results.
  CHECK(parse_layout(lay) == r.layout);
  CHECK(parse_placement(plc, r.circuit) == r.placement);
  CHECK(parse_routing(rte, r.circuit) == r.routing);
}

TEST_CASE("same seed, same routing bytes") {
  TempDir a("det-a"), b("det-b");
  PipelineConfig cfg;
  cfg.seed = 4;
  cfg.out_dir = a.str();
  run_pipeline(cfg);
  cfg.out_dir = b.str();
  run_pipeline(cfg);
  for (const char* f : {"circuit.nlc", "layout.lay", "placement.plc", "routing.rte"})
    CHECK(slurp(a.path / f) == slurp(b.path / f));
  CHECK(slurp(a.path / "metrics.txt") != "");
}

TEST_CASE("large flow writes one placement fragment per block") {
  TempDir dir("large");
  PipelineConfig cfg;
  cfg.approach = Approach::large_astar;
  cfg.blocks = 4;
  cfg.seed = 2;
  cfg.out_dir = dir.str();
  const auto c = four_adders();
  const auto r = run_pipeline(cfg, c);
  const auto files = names(r);
  for (const char* f : {"partition.prt", "floorplan.fpl", "placement.b0.plc", "placement.b1.plc", "placement.b2.plc",
                        "placement.b3.plc", "placement.plc", "routing.rte"})
    CHECK(has(files, f));
  CHECK_FALSE(has(files, "placement.b4.plc"));
  CHECK(r.floorplan.rects.size() == 4);
  CHECK(r.blocks.size() == 4);

  // Fragments are disjoint and together make up the stitched placement.
  Placement merged = Placement::empty_for(c);
  for (int b = 0; b < 4; ++b) {
    const auto frag = parse_placement(slurp(dir.path / ("placement.b" + std::to_string(b) + ".plc")), c);
    for (int i = 0; i < c.component_count(); ++i)
      if (frag.comp_map[i] != kUnmapped) {
        CHECK(merged.comp_map[i] == kUnmapped);
        merged.comp_map[i] = frag.comp_map[i];
      }
    for (int i = 0; i < c.io_count(); ++i)
      if (frag.io_map[i] != kUnmapped) merged.io_map[i] = frag.io_map[i];
  }
  CHECK(merged == r.placement);

  const auto nlc = slurp(dir.path / "circuit.nlc"), lay = slurp(dir.path / "layout.lay");
  const auto prt = slurp(dir.path / "partition.prt"), fpl = slurp(dir.path / "floorplan.fpl");
  CHECK(source_of(prt) == partition_source(nlc));
  CHECK(source_of(fpl) == floorplan_source(prt, lay));
  CHECK(source_of(slurp(dir.path / "placement.plc")) == placement_source(nlc, lay, fpl));

  // Stitched metrics are the intra and inter parts added up.
  CHECK(r.routing.wire_length() == doctest::Approx(r.routing.wire_length(false) + r.routing.wire_length(true)));
  CHECK(r.metrics.rt_partition == doctest::Approx(r.rt.partition_s + r.rt.floorplan_s));
}

TEST_CASE("stage errors name the stage and what was written") {
  TempDir dir("fail");
  PipelineConfig cfg;
  cfg.approach = Approach::large_astar;
  cfg.blocks = 4;
  cfg.floorplan.margin = 50;  // no block can hold 51x its own need
  cfg.out_dir = dir.str();
  try {
    run_pipeline(cfg, four_adders());
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "floorplan");
    std::vector<std::string> written;
    for (const auto& f : e.artifacts()) written.push_back(fs::path(f).filename().string());
    CHECK(written == std::vector<std::string>{"circuit.nlc", "layout.lay", "partition.prt"});
  }
}

TEST_CASE("unknown circuits are config errors") {
  CHECK_THROWS_AS(load_circuit("no_such_circuit"), ConfigError);
  CHECK(load_circuit("full_adder").component_count() == 42);
}

TEST_CASE("bench runs every cell and normalizes to the baseline") {
  BenchConfig bc;
  bc.circuits = {"full_adder"};
  bc.approaches = {Approach::small, Approach::baseline_manhattan};
  bc.seeds = {1, 2, 3};
  bc.baseline = Approach::small;
  const auto r = bench(bc);
  REQUIRE(r.rows.size() == 6);
  REQUIRE(r.cells.size() == 2);
  const auto& base = r.cells[0];
  const auto& other = r.cells[1];
  CHECK(base.approach == Approach::small);
  CHECK(base.runs == 3);
  CHECK(base.psi_r_rel == doctest::Approx(1.0));
  CHECK(base.omega_rel == doctest::Approx(1.0));
  CHECK(base.speedup == doctest::Approx(1.0));
  CHECK(other.speedup == doctest::Approx(base.rt_mean / other.rt_mean));
  CHECK(other.omega_rel == doctest::Approx(other.omega_mean / base.omega_mean));
  double sum = 0;
  for (int i = 0; i < 3; ++i) sum += r.rows[i].metrics.psi_r;
  CHECK(base.psi_r_mean == doctest::Approx(sum / 3));

  const auto table = format_bench(r);
  CHECK(count(table, "\n") == 1 + 6 + 1 + 1 + 2);
}

TEST_CASE("bench summary arithmetic and failed runs") {
  auto row = [](Approach a, double psi, double rt, std::string err = "") {
    BenchRow r{"c", a, 0, {}, 0, std::move(err)};
    r.metrics.psi_r = psi;
    r.metrics.omega = static_cast<int>(psi);
    r.metrics.rt_per_instance = rt;
    return r;
  };
  const auto r = summarize({row(Approach::small, 10, 4), row(Approach::small, 14, 8), row(Approach::large_astar, 12, 1),
                            row(Approach::large_astar, 0, 0, "boom")},
                           Approach::small);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.cells[0].psi_r_mean == 12);
  CHECK(r.cells[0].psi_r_sd == doctest::Approx(std::sqrt(8.0)));
  CHECK(r.cells[1].runs == 1);
  CHECK(r.cells[1].failed_runs == 1);
  CHECK(r.cells[1].psi_r_rel == doctest::Approx(1.0));
  CHECK(r.cells[1].speedup == doctest::Approx(6.0));
}

TEST_CASE("render draws one group per routed net") {
  PipelineConfig cfg;
  cfg.seed = 3;
  const auto r = run_pipeline(cfg);
  REQUIRE(r.routing.failures.empty());
  const auto svg = render_svg(r.circuit, r.layout, r.placement, r.routing);
  std::regex group("<g id=\"net-([0-9]+)\">");
  std::set<std::string> ids;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), group); it != std::sregex_iterator(); ++it) ids.insert((*it)[1]);
  CHECK(ids.size() == 28);
  CHECK(count(svg, "<g id=\"net-") == 28);
  CHECK(count(svg, "class=\"insulator\"") == r.metrics.omega);
  CHECK(count(svg, "class=\"component\"") == 42);
  CHECK(count(svg, "class=\"component unused\"") == static_cast<int>(r.layout.components.size()) - 42);
  CHECK(svg.find("stroke=\"red\"") == std::string::npos);  // no inter-block wires in one block
  CHECK(svg.find("id=\"floorplan\"") == std::string::npos);
}

TEST_CASE("render of an empty routing shows components only") {
  PipelineConfig cfg;
  const auto r = run_pipeline(cfg);
  const auto svg = render_svg(r.circuit, r.layout, r.placement, RoutingSolution{});
  CHECK(count(svg, "<g id=\"net-") == 0);
  CHECK(count(svg, "class=\"insulator\"") == 0);
  CHECK(count(svg, "class=\"component") == static_cast<int>(r.layout.components.size()));
}

TEST_CASE("render colours inter-block wires and outlines blocks") {
  PipelineConfig cfg;
  cfg.approach = Approach::large_astar;
  cfg.blocks = 4;
  cfg.seed = 2;
  const auto r = run_pipeline(cfg, four_adders());
  RenderOptions opt;
  opt.floorplan = &r.floorplan;
  const auto svg = render_svg(r.circuit, r.layout, r.placement, r.routing, opt);
  CHECK(count(svg, "class=\"block\"") == 4);
  int inter = 0;
  for (const auto& p : r.routing.sequence)
    if (const auto* w = std::get_if<Wire>(&p); w && w->inter_block) ++inter;
  CHECK(count(svg, "stroke=\"red\"") == inter);
}
