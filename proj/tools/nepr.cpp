// nepr: command-line driver for the layout-to-routing flow.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <list>
#include <sstream>

#include "nepr/artifacts.hpp"
#include "nepr/circuits.hpp"
#include "nepr/metrics.hpp"
#include "nepr/pipeline.hpp"
#include "nepr/render.hpp"
#include "nepr/rng.hpp"

using namespace nepr;

namespace {

constexpr int kValidation = 2;
constexpr int kRoutingFailures = 3;
constexpr int kConfig = 4;

class ValidationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const std::string& path, const std::string& doc) {
  if (path.empty() || path == "-") {
    std::cout << doc;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << doc;
}

void expect_source(std::string_view doc, std::uint64_t want, const std::string& what) {
  auto got = source_of(doc);
  if (!got) throw ValidationFailure(what + " carries no src line");
  if (*got != want) throw ValidationFailure(what + " was not derived from the given inputs (src " + to_hex(*got) + ", expected " + to_hex(want) + ")");
}

// Netlist text as hashed by later stages: the file itself for .nlc inputs.
std::string netlist_doc(const std::string& name) {
  if (name.size() > 4 && name.substr(name.size() - 4) == ".nlc") return slurp(name);
  return serialize_netlist(load_circuit(name));
}

// Options shared by the stage commands; anything set on the command line
// overrides the config file.
struct Common {
  std::string config;
  std::uint64_t seed = 1;
  int blocks = 4;
  int jobs = 0;
  double rho = 10.0;
  double grid_g = 0.0;
  double astar_weight = 1.5;
  std::string inter;
  double alpha = kDefaultWireSpeed;
  bool route_over_unused = false;
  bool no_virtual_pins = false;
  std::string approach;
  std::string circuit;
  std::string out_dir;

  CLI::Option *o_seed = nullptr, *o_blocks = nullptr, *o_jobs = nullptr, *o_rho = nullptr, *o_g = nullptr,
              *o_w = nullptr, *o_inter = nullptr, *o_alpha = nullptr, *o_over = nullptr, *o_novp = nullptr,
              *o_approach = nullptr, *o_circuit = nullptr, *o_out = nullptr;

  void attach(CLI::App* app, bool pipeline) {
    app->add_option("--config", config, "JSON config file");
    o_seed = app->add_option("--seed", seed, "random seed");
    o_blocks = app->add_option("--blocks", blocks, "partition block count");
    o_jobs = app->add_option("--jobs", jobs, "worker threads (0: one per block)");
    o_rho = app->add_option("--rho", rho, "deposition pitch, um");
    o_g = app->add_option("--grid-g", grid_g, "routing grid spacing, um (0: default)");
    o_w = app->add_option("--astar-weight", astar_weight, "heuristic weight for inter-block A*");
    o_inter = app->add_option("--inter", inter, "inter-block search")->check(CLI::IsMember({"bfs", "astar"}));
    o_alpha = app->add_option("--alpha", alpha, "print head speed, um/s");
    o_over = app->add_flag("--route-over-unused", route_over_unused, "let wires cross unused components");
    o_novp = app->add_flag("--no-virtual-pins", no_virtual_pins, "disable virtual pins in block placement");
    if (pipeline) {
      o_approach = app->add_option("--approach", approach, "small, large-bfs, large-astar, large-astar-semantics, baseline-euclidean, baseline-manhattan");
      o_circuit = app->add_option("--circuit", circuit, "builtin name or .nlc/.gnl file");
      o_out = app->add_option("--out", out_dir, "artifact directory");
    }
  }

  PipelineConfig make() const {
    PipelineConfig c;
    if (!config.empty()) c = parse_config(slurp(config));
    if (o_seed->count()) c.seed = seed;
    if (o_blocks->count()) c.blocks = blocks;
    if (o_jobs->count()) c.jobs = jobs;
    if (o_rho->count()) c.deposition.rho = rho;
    if (o_g->count()) c.route.grid.g = grid_g;
    if (o_w->count()) c.route.astar_weight = astar_weight;
    if (o_inter->count()) c.route.inter = inter == "bfs" ? InterMode::bfs : InterMode::astar;
    if (o_alpha->count()) c.alpha = alpha;
    if (o_over->count()) c.route.grid.route_over_unused = true;
    if (o_novp->count()) c.virtual_pins = false;
    if (o_approach && o_approach->count()) c.approach = parse_approach(approach);
    if (o_circuit && o_circuit->count()) c.circuit = circuit;
    if (o_out && o_out->count()) c.out_dir = out_dir;
    if (c.blocks < 1) throw ConfigError("blocks must be >= 1");
    if (!(c.alpha > 0)) throw ConfigError("alpha must be positive");
    if (c.route.astar_weight < 1) throw ConfigError("astar weight must be >= 1");
    return c;
  }
};

void print_failures(const RoutingSolution& s) {
  for (const auto& f : s.failures) std::cerr << "failed net " << f.net << ": " << f.reason << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nanomodular electronics placement and routing"};
  app.require_subcommand(1);
  std::string out;
  std::list<Common> commons;  // one per subcommand; options keep pointers into it
  auto options = [&](CLI::App* sub, bool pipeline) -> Common& {
    commons.emplace_back().attach(sub, pipeline);
    return commons.back();
  };

  // expand
  std::string gnl;
  auto* expand = app.add_subcommand("expand", "expand a gate netlist (.gnl or builtin name) into a transistor netlist");
  expand->add_option("circuit", gnl)->required();
  expand->add_option("-o,--output", out);

  // gen-layout
  std::string circuit_in;
  auto* gen = app.add_subcommand("gen-layout", "deposit physical components for a circuit");
  gen->add_option("circuit", circuit_in)->required();
  gen->add_option("-o,--output", out);
  Common& o_gen = options(gen, false);

  // partition
  std::string nlc_path, lay_path, prt_path, fpl_path, plc_path, rte_path;
  bool semantics = false;
  auto* part = app.add_subcommand("partition", "split the netlist into balanced blocks");
  part->add_option("netlist", nlc_path)->required();
  part->add_flag("--semantics", semantics, "pre-partition by module tag");
  part->add_option("-o,--output", out);
  Common& o_part = options(part, false);

  auto* fplan = app.add_subcommand("floorplan", "assign substrate rectangles to blocks");
  fplan->add_option("netlist", nlc_path)->required();
  fplan->add_option("partition", prt_path)->required();
  fplan->add_option("layout", lay_path)->required();
  fplan->add_option("-o,--output", out);
  Common& o_fplan = options(fplan, false);

  std::string frag_dir;
  auto* place = app.add_subcommand("place", "map logical components onto deposited ones");
  place->add_option("netlist", nlc_path)->required();
  place->add_option("layout", lay_path)->required();
  place->add_option("--partition", prt_path);
  place->add_option("--floorplan", fpl_path);
  place->add_option("--fragments", frag_dir, "also write one placement per block here");
  place->add_option("-o,--output", out);
  Common& o_place = options(place, false);

  std::string baseline;
  auto* route = app.add_subcommand("route", "route every net on the grid");
  route->add_option("netlist", nlc_path)->required();
  route->add_option("layout", lay_path)->required();
  route->add_option("placement", plc_path)->required();
  route->add_option("--floorplan", fpl_path, "route blocks separately, then join them");
  route->add_option("--direct", baseline, "straight-line baseline instead of routing")
      ->check(CLI::IsMember({"euclidean", "manhattan"}));
  route->add_option("-o,--output", out);
  Common& o_route = options(route, false);

  auto* run = app.add_subcommand("run", "run a whole approach end to end");
  Common& o_run = options(run, true);

  auto* drc = app.add_subcommand("drc", "check a routing against the design rules");
  drc->add_option("netlist", nlc_path)->required();
  drc->add_option("layout", lay_path)->required();
  drc->add_option("placement", plc_path)->required();
  drc->add_option("routing", rte_path)->required();
  Common& o_drc = options(drc, false);

  std::string ledger;
  auto* metrics = app.add_subcommand("metrics", "wire length, insulators and time model of a routing");
  metrics->add_option("netlist", nlc_path)->required();
  metrics->add_option("layout", lay_path)->required();
  metrics->add_option("placement", plc_path)->required();
  metrics->add_option("routing", rte_path)->required();
  metrics->add_option("--ledger", ledger, "metrics file of the run, for its stage timings");
  Common& o_metrics = options(metrics, false);

  double px = 4.0;
  auto* render = app.add_subcommand("render", "draw an SVG of the layout and routing");
  render->add_option("netlist", nlc_path)->required();
  render->add_option("layout", lay_path)->required();
  render->add_option("placement", plc_path)->required();
  render->add_option("routing", rte_path)->required();
  render->add_option("--floorplan", fpl_path);
  render->add_option("--scale", px, "pixels per um");
  render->add_option("-o,--output", out);

  std::vector<std::string> circuits, approaches;
  std::vector<std::uint64_t> seeds;
  int seed_count = 0;
  std::string bench_base = "small";
  auto* bench_cmd = app.add_subcommand("bench", "sweep circuits x approaches x seeds");
  bench_cmd->add_option("--circuits", circuits)->required();
  bench_cmd->add_option("--approaches", approaches)->required();
  bench_cmd->add_option("--seeds", seeds, "explicit seed list");
  bench_cmd->add_option("--seed-count", seed_count, "seeds 1..N");
  bench_cmd->add_option("--baseline", bench_base);
  bench_cmd->add_option("-o,--output", out);
  Common& o_bench_cmd = options(bench_cmd, true);

  bool dump = false;
  auto* config = app.add_subcommand("config", "show configuration");
  config->add_flag("--dump", dump, "print every setting with its value")->required();
  Common& o_config = options(config, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*expand) {
      put(out, serialize_netlist(load_circuit(gnl)));
      return 0;
    }
    if (*config) {
      std::cout << dump_config(o_config.make());
      return 0;
    }
    if (*gen) {
      const auto cfg = o_gen.make();
      const std::string nlc = netlist_doc(circuit_in);
      const auto c = parse_netlist(nlc);
      put(out, stamp_source(serialize_layout(generate_layout(c, cfg.deposition, cfg.seed)), layout_source(nlc)));
      return 0;
    }
    if (*run) {
      const auto cfg = o_run.make();
      try {
        const auto r = run_pipeline(cfg);
        std::cout << serialize_metrics(r.metrics);
        if (!r.partition_warning.empty()) std::cerr << "warning: " << r.partition_warning << "\n";
        print_failures(r.routing);
        return r.routing.failures.empty() ? 0 : kRoutingFailures;
      } catch (const StageError& e) {
        std::cerr << "error in stage " << e.stage() << ": " << e.what() << "\n";
        for (const auto& f : e.artifacts()) std::cerr << "  written: " << f << "\n";
        return kValidation;
      }
    }
    if (*bench_cmd) {
      BenchConfig bc;
      bc.base = o_bench_cmd.make();
      bc.circuits = circuits;
      for (const auto& a : approaches) bc.approaches.push_back(parse_approach(a));
      bc.baseline = parse_approach(bench_base);
      bc.seeds = seeds;
      for (int i = 1; i <= seed_count; ++i) bc.seeds.push_back(static_cast<std::uint64_t>(i));
      if (bc.seeds.empty()) bc.seeds.push_back(bc.base.seed);
      put(out, format_bench(bench(bc)));
      return 0;
    }

    // Stage commands over artifact files.
    const std::string nlc = slurp(nlc_path);
    const auto c = parse_netlist(nlc);

    if (*part) {
      const auto cfg = o_part.make();
      const auto seed = derive_seed(cfg.seed, 1);
      std::string warning;
      const auto p = semantics ? semantic_prepartition(c, cfg.blocks, seed, cfg.partition, &warning)
                               : fm_partition(c, cfg.blocks, seed, cfg.partition);
      if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
      std::cerr << "cut cost " << cut_cost(c, p) << "\n";
      put(out, stamp_source(serialize_partition(p), partition_source(nlc)));
      return 0;
    }

    const std::string lay = slurp(lay_path);
    const auto layout = parse_layout(lay);
    expect_source(lay, layout_source(nlc), lay_path);

    if (*fplan) {
      const auto cfg = o_fplan.make();
      const std::string prt = slurp(prt_path);
      expect_source(prt, partition_source(nlc), prt_path);
      const auto p = parse_partition(prt, c);
      const auto fp = floorplan_sa(c, p, layout, derive_seed(cfg.seed, 2), cfg.floorplan);
      put(out, stamp_source(serialize_floorplan(fp), floorplan_source(prt, lay)));
      return 0;
    }

    const std::string fpl = fpl_path.empty() ? std::string() : slurp(fpl_path);

    if (*place) {
      const auto cfg = o_place.make();
      PartitionResult p = PartitionResult::single(c);
      Floorplan fp = whole_substrate(layout);
      const bool blocks = !prt_path.empty();
      if (blocks != !fpl_path.empty()) throw ConfigError("--partition and --floorplan go together");
      if (blocks) {
        const std::string prt = slurp(prt_path);
        expect_source(prt, partition_source(nlc), prt_path);
        expect_source(fpl, floorplan_source(prt, lay), fpl_path);
        p = parse_partition(prt, c);
        fp = parse_floorplan(fpl);
      }
      const auto problems = make_block_problems(c, layout, p, fp, blocks && cfg.virtual_pins);
      const int jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(problems.size());
      const auto m = place_blocks(c, layout, problems, cfg.place, derive_seed(cfg.seed, 3), jobs);
      const auto src = placement_source(nlc, lay, fpl);
      if (!frag_dir.empty()) {
        for (const auto& b : problems) {
          Placement frag = Placement::empty_for(c);
          for (int i : b.comps) frag.comp_map[i] = m.comp_map[i];
          for (int i : b.ios) frag.io_map[i] = m.io_map[i];
          put(frag_dir + "/placement.b" + std::to_string(b.block) + ".plc", stamp_source(serialize_placement(frag, c), src));
        }
      }
      put(out, stamp_source(serialize_placement(m, c), src));
      return 0;
    }

    const std::string plc = slurp(plc_path);
    const auto m = parse_placement(plc, c);
    validate_placement(m, c, layout);

    if (*route) {
      const auto cfg = o_route.make();
      expect_source(plc, placement_source(nlc, lay, fpl), plc_path);
      RoutingSolution s;
      if (baseline == "euclidean") s = direct_connect(c, layout, m, Metric::euclidean);
      else if (baseline == "manhattan") s = direct_connect(c, layout, m, Metric::manhattan);
      else {
        const Floorplan fp = fpl.empty() ? whole_substrate(layout) : parse_floorplan(fpl);
        const int jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(fp.rects.size());
        s = route_circuit(c, layout, m, fp, cfg.route, jobs);
      }
      put(out, stamp_source(serialize_routing(s, c), routing_source(nlc, lay, plc)));
      print_failures(s);
      return s.failures.empty() ? 0 : kRoutingFailures;
    }

    const std::string rte = slurp(rte_path);
    const auto s = parse_routing(rte, c);

    if (*drc) {
      const auto cfg = o_drc.make();
      const auto report = drc_check(s, c, m, layout, {s.grid, cfg.route.grid.route_over_unused});
      for (const auto& [kind, n] : report.histogram()) std::cout << kind << " " << n << "\n";
      for (const auto& v : report.violations) std::cerr << v.kind << ": " << v.detail << "\n";
      if (!report.pass()) return kValidation;
      std::cout << "ok\n";
      return s.failures.empty() ? 0 : kRoutingFailures;
    }

    // render and metrics refuse artifacts that do not chain together
    expect_source(rte, routing_source(nlc, lay, plc), rte_path);
    if (!fpl.empty()) expect_source(plc, placement_source(nlc, lay, fpl), plc_path);

    if (*metrics) {
      const auto cfg = o_metrics.make();
      RtLedger rt;
      if (!ledger.empty()) {
        const auto prev = parse_metrics(slurp(ledger));
        if (prev.source && prev.source != content_hash(rte)) throw ValidationFailure(ledger + " measured a different routing");
        rt.partition_s = prev.rt_partition;
        rt.place_s = prev.rt_per_instance;
      }
      auto r = measure(s, layout, cfg.alpha, rt);
      r.source = content_hash(rte);
      std::cout << serialize_metrics(r);
      return 0;
    }

    if (*render) {
      Floorplan fp;
      RenderOptions opt;
      opt.px_per_um = px;
      if (!fpl.empty()) {
        fp = parse_floorplan(fpl);
        opt.floorplan = &fp;
      }
      put(out, render_svg(c, layout, m, s, opt));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ValidationFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const SemanticError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
