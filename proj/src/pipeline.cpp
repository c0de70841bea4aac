#include "nepr/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nepr/artifacts.hpp"
#include "nepr/circuits.hpp"
#include "nepr/gates.hpp"

namespace nepr {

namespace {

constexpr std::pair<Approach, const char*> kApproachNames[] = {
    {Approach::small, "small"},
    {Approach::large_bfs, "large-bfs"},
    {Approach::large_astar, "large-astar"},
    {Approach::large_astar_semantics, "large-astar-semantics"},
    {Approach::baseline_euclidean, "baseline-euclidean"},
    {Approach::baseline_manhattan, "baseline-manhattan"},
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string to_string(Approach a) {
  for (auto [k, name] : kApproachNames)
    if (k == a) return name;
  return "?";
}

Approach parse_approach(std::string_view s) {
  for (auto [k, name] : kApproachNames)
    if (s == name) return k;
  throw ConfigError("unknown approach '" + std::string(s) + "'");
}

bool is_large(Approach a) {
  return a == Approach::large_bfs || a == Approach::large_astar || a == Approach::large_astar_semantics;
}

bool is_baseline(Approach a) { return a == Approach::baseline_euclidean || a == Approach::baseline_manhattan; }

// ---------------------------------------------------------------------------
// Config

std::string dump_config(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["circuit"] = c.circuit;
  j["approach"] = to_string(c.approach);
  j["blocks"] = c.blocks;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["out_dir"] = c.out_dir;
  j["alpha"] = c.alpha;
  j["deposition"] = {{"rho", c.deposition.rho},
                     {"jitter", c.deposition.jitter},
                     {"iid_types", c.deposition.iid_types},
                     {"max_retries", c.deposition.max_retries}};
  j["partition"] = {{"tolerance", c.partition.tolerance}, {"max_passes", c.partition.max_passes}, {"starts", c.partition.starts}};
  j["floorplan"] = {{"margin", c.floorplan.margin}, {"init_attempts", c.floorplan.init_attempts}};
  j["place"] = {{"iters_scale", c.place.iters_scale},
                {"iterations", c.place.iterations},
                {"epsilon_ratio", c.place.epsilon_ratio},
                {"virtual_pins", c.virtual_pins}};
  j["route"] = {{"grid_g", c.route.grid.g},
                {"route_over_unused", c.route.grid.route_over_unused},
                {"inter", c.route.inter == InterMode::astar ? "astar" : "bfs"},
                {"astar_weight", c.route.astar_weight}};
  return j.dump(2) + "\n";
}

namespace {

template <class T>
void take(const nlohmann::json& j, const char* key, T& out) {
  try {
    out = j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

template <class F>
void each(const nlohmann::json& obj, const std::string& where, F&& f) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!f(it.key(), it.value())) throw ConfigError("unknown key '" + where + (where.empty() ? "" : ".") + it.key() + "'");
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const PipelineConfig& base) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c = base;
  each(root, "", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "circuit") take(v, "circuit", c.circuit);
    else if (k == "approach") {
      std::string s;
      take(v, "approach", s);
      c.approach = parse_approach(s);
    } else if (k == "blocks") take(v, "blocks", c.blocks);
    else if (k == "seed") take(v, "seed", c.seed);
    else if (k == "jobs") take(v, "jobs", c.jobs);
    else if (k == "out_dir") take(v, "out_dir", c.out_dir);
    else if (k == "alpha") take(v, "alpha", c.alpha);
    else if (k == "deposition") {
      each(v, k, [&](const std::string& s, const nlohmann::json& x) {
        if (s == "rho") take(x, "rho", c.deposition.rho);
        else if (s == "jitter") take(x, "jitter", c.deposition.jitter);
        else if (s == "iid_types") take(x, "iid_types", c.deposition.iid_types);
        else if (s == "max_retries") take(x, "max_retries", c.deposition.max_retries);
        else return false;
        return true;
      });
    } else if (k == "partition") {
      each(v, k, [&](const std::string& s, const nlohmann::json& x) {
        if (s == "tolerance") take(x, "tolerance", c.partition.tolerance);
        else if (s == "max_passes") take(x, "max_passes", c.partition.max_passes);
        else if (s == "starts") take(x, "starts", c.partition.starts);
        else return false;
        return true;
      });
    } else if (k == "floorplan") {
      each(v, k, [&](const std::string& s, const nlohmann::json& x) {
        if (s == "margin") take(x, "margin", c.floorplan.margin);
        else if (s == "init_attempts") take(x, "init_attempts", c.floorplan.init_attempts);
        else return false;
        return true;
      });
    } else if (k == "place") {
      each(v, k, [&](const std::string& s, const nlohmann::json& x) {
        if (s == "iters_scale") take(x, "iters_scale", c.place.iters_scale);
        else if (s == "iterations") take(x, "iterations", c.place.iterations);
        else if (s == "epsilon_ratio") take(x, "epsilon_ratio", c.place.epsilon_ratio);
        else if (s == "virtual_pins") take(x, "virtual_pins", c.virtual_pins);
        else return false;
        return true;
      });
    } else if (k == "route") {
      each(v, k, [&](const std::string& s, const nlohmann::json& x) {
        if (s == "grid_g") take(x, "grid_g", c.route.grid.g);
        else if (s == "route_over_unused") take(x, "route_over_unused", c.route.grid.route_over_unused);
        else if (s == "astar_weight") take(x, "astar_weight", c.route.astar_weight);
        else if (s == "inter") {
          std::string m;
          take(x, "inter", m);
          if (m == "astar") c.route.inter = InterMode::astar;
          else if (m == "bfs") c.route.inter = InterMode::bfs;
          else throw ConfigError("route.inter must be bfs or astar");
        } else return false;
        return true;
      });
    } else return false;
    return true;
  });
  if (c.blocks < 1) throw ConfigError("blocks must be >= 1");
  if (!(c.alpha > 0)) throw ConfigError("alpha must be positive");
  if (c.route.astar_weight < 1) throw ConfigError("route.astar_weight must be >= 1");
  return c;
}

LogicalCircuit load_circuit(const std::string& name) {
  if (ends_with(name, ".nlc")) return parse_netlist(read_file(name));
  if (ends_with(name, ".gnl")) return expand_gates(parse_gate_netlist(read_file(name)));
  try {
    return expand_gates(builtin_circuit(name));
  } catch (const std::invalid_argument&) {
    throw ConfigError("unknown circuit '" + name + "'");
  }
}

std::uint64_t layout_source(std::string_view netlist) { return chain_hash({content_hash(netlist)}); }
std::uint64_t partition_source(std::string_view netlist) { return chain_hash({content_hash(netlist)}); }
std::uint64_t floorplan_source(std::string_view partition, std::string_view layout) {
  return chain_hash({content_hash(partition), content_hash(layout)});
}
std::uint64_t placement_source(std::string_view netlist, std::string_view layout, std::string_view floorplan) {
  return chain_hash({content_hash(netlist), content_hash(layout), content_hash(floorplan)});
}

std::uint64_t routing_source(std::string_view netlist, std::string_view layout, std::string_view placement) {
  return chain_hash({content_hash(netlist), content_hash(layout), content_hash(placement)});
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

class Run {
 public:
  Run(const PipelineConfig& cfg, PipelineResult& r) : cfg_(cfg), r_(r) {
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
  }

  template <class F>
  auto stage(const std::string& name, F&& f) {
    try {
      return f();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what(), r_.files);
    }
  }

  /// Writes `doc` (stamped with `src` when given) and returns what was written.
  std::string emit(const std::string& file, std::string doc, std::optional<std::uint64_t> src = {}) {
    if (src) doc = stamp_source(doc, *src);
    if (cfg_.out_dir.empty()) return doc;
    auto path = (std::filesystem::path(cfg_.out_dir) / file).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc;
    r_.files.push_back(path);
    return doc;
  }

 private:
  const PipelineConfig& cfg_;
  PipelineResult& r_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, const LogicalCircuit& c) {
  PipelineResult r;
  r.circuit = c;
  Run run(cfg, r);
  const Approach a = cfg.approach;
  const bool large = is_large(a);
  const int jobs = cfg.jobs > 0 ? cfg.jobs : (large ? cfg.blocks : 1);

  const std::string nlc = run.emit("circuit.nlc", serialize_netlist(c));
  r.layout = run.stage("gen-layout", [&] { return generate_layout(c, cfg.deposition, cfg.seed); });
  const std::string lay = run.emit("layout.lay", serialize_layout(r.layout), layout_source(nlc));

  std::string fpl;
  if (large) {
    auto t = Clock::now();
    r.partition = run.stage("partition", [&] {
      const auto seed = derive_seed(cfg.seed, 1);
      if (a == Approach::large_astar_semantics)
        return semantic_prepartition(c, cfg.blocks, seed, cfg.partition, &r.partition_warning);
      return fm_partition(c, cfg.blocks, seed, cfg.partition);
    });
    r.rt.partition_s = since(t);
    const std::string prt = run.emit("partition.prt", serialize_partition(r.partition), partition_source(nlc));
    t = Clock::now();
    r.floorplan = run.stage("floorplan", [&] { return floorplan_sa(c, r.partition, r.layout, derive_seed(cfg.seed, 2), cfg.floorplan); });
    r.rt.floorplan_s = since(t);
    fpl = run.emit("floorplan.fpl", serialize_floorplan(r.floorplan), floorplan_source(prt, lay));
  } else {
    r.partition = PartitionResult::single(c);
    r.floorplan = whole_substrate(r.layout);
  }

  auto t = Clock::now();
  r.placement = run.stage("place", [&] {
    r.blocks = make_block_problems(c, r.layout, r.partition, r.floorplan, large && cfg.virtual_pins);
    return place_blocks(c, r.layout, r.blocks, cfg.place, derive_seed(cfg.seed, 3), jobs, &r.place_stats);
  });
  r.rt.place_s = since(t);
  const auto plc_src = placement_source(nlc, lay, fpl);
  if (large && !cfg.out_dir.empty()) {
    for (const auto& b : r.blocks) {
      Placement part = Placement::empty_for(c);
      for (int i : b.comps) part.comp_map[i] = r.placement.comp_map[i];
      for (int i : b.ios) part.io_map[i] = r.placement.io_map[i];
      run.emit("placement.b" + std::to_string(b.block) + ".plc", serialize_placement(part, c), plc_src);
    }
  }
  const std::string plc = run.emit("placement.plc", serialize_placement(r.placement, c), plc_src);

  t = Clock::now();
  r.routing = run.stage("route", [&] {
    if (a == Approach::baseline_euclidean) return direct_connect(c, r.layout, r.placement, Metric::euclidean);
    if (a == Approach::baseline_manhattan) return direct_connect(c, r.layout, r.placement, Metric::manhattan);
    RouteOptions ro = cfg.route;
    if (a == Approach::large_bfs) ro.inter = InterMode::bfs;
    if (a == Approach::large_astar || a == Approach::large_astar_semantics) ro.inter = InterMode::astar;
    return route_circuit(c, r.layout, r.placement, r.floorplan, ro, jobs, &r.route_stats);
  });
  r.rt.route_s = since(t);
  const std::string rte = run.emit("routing.rte", serialize_routing(r.routing, c), routing_source(nlc, lay, plc));

  r.metrics = measure(r.routing, r.layout, cfg.alpha, r.rt);
  r.metrics.source = content_hash(rte);
  run.emit("metrics.txt", serialize_metrics(r.metrics));
  return r;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) { return run_pipeline(cfg, load_circuit(cfg.circuit)); }

// ---------------------------------------------------------------------------
// Bench

namespace {

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
}

}  // namespace

BenchResult summarize(const std::vector<BenchRow>& rows, Approach baseline) {
  BenchResult out;
  out.rows = rows;
  std::map<std::pair<std::string, int>, std::vector<const BenchRow*>> groups;
  std::vector<std::pair<std::string, int>> order;
  for (const auto& row : rows) {
    auto k = std::pair{row.circuit, static_cast<int>(row.approach)};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&row);
  }
  for (const auto& k : order) {
    BenchCell cell;
    cell.circuit = k.first;
    cell.approach = static_cast<Approach>(k.second);
    std::vector<double> psi, omega, rt, et;
    for (const BenchRow* row : groups[k]) {
      if (!row->error.empty()) {
        ++cell.failed_runs;
        continue;
      }
      psi.push_back(row->metrics.psi_r);
      omega.push_back(row->metrics.omega);
      rt.push_back(row->metrics.rt_per_instance);
      et.push_back(row->metrics.et);
    }
    cell.runs = static_cast<int>(psi.size());
    mean_sd(psi, cell.psi_r_mean, cell.psi_r_sd);
    mean_sd(omega, cell.omega_mean, cell.omega_sd);
    mean_sd(rt, cell.rt_mean, cell.rt_sd);
    double et_sd;
    mean_sd(et, cell.et_mean, et_sd);
    out.cells.push_back(cell);
  }
  for (auto& cell : out.cells) {
    const BenchCell* base = nullptr;
    for (const auto& other : out.cells)
      if (other.circuit == cell.circuit && other.approach == baseline) base = &other;
    if (!base) continue;
    cell.psi_r_rel = base->psi_r_mean > 0 ? cell.psi_r_mean / base->psi_r_mean : 0;
    cell.omega_rel = base->omega_mean > 0 ? cell.omega_mean / base->omega_mean : 0;
    cell.speedup = cell.rt_mean > 0 ? base->rt_mean / cell.rt_mean : 0;
  }
  return out;
}

BenchResult bench(const BenchConfig& cfg) {
  std::vector<BenchRow> rows;
  for (const auto& name : cfg.circuits) {
    std::optional<LogicalCircuit> c;
    std::string load_error;
    try {
      c = load_circuit(name);
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (Approach a : cfg.approaches) {
      for (auto seed : cfg.seeds) {
        BenchRow row{name, a, seed, {}, 0, load_error};
        if (c) {
          PipelineConfig pc = cfg.base;
          pc.circuit = name;
          pc.approach = a;
          pc.seed = seed;
          pc.out_dir.clear();
          try {
            auto r = run_pipeline(pc, *c);
            row.metrics = r.metrics;
            row.inter_wl = r.routing.wire_length(true);
          } catch (const std::exception& e) {
            row.error = e.what();
          }
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return summarize(rows, cfg.baseline);
}

std::string format_bench(const BenchResult& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os << "circuit\tapproach\tseed\tpsi_r\tomega\trt_per_instance_s\tet_s\tfailed_nets\terror\n";
  for (const auto& row : r.rows) {
    os.precision(3);
    os << row.circuit << '\t' << to_string(row.approach) << '\t' << row.seed << '\t' << row.metrics.psi_r << '\t'
       << row.metrics.omega << '\t';
    os.precision(4);
    os << row.metrics.rt_per_instance << '\t' << row.metrics.et << '\t' << row.metrics.failures << '\t'
       << (row.error.empty() ? "-" : row.error) << '\n';
  }
  os << "\ncircuit\tapproach\truns\tpsi_r_mean\tpsi_r_sd\tomega_mean\tomega_sd\trt_mean_s\trt_sd_s\tpsi_r_rel\tomega_rel\tspeedup\n";
  for (const auto& c : r.cells) {
    os.precision(3);
    os << c.circuit << '\t' << to_string(c.approach) << '\t' << c.runs << '\t' << c.psi_r_mean << '\t' << c.psi_r_sd << '\t'
       << c.omega_mean << '\t' << c.omega_sd << '\t';
    os.precision(4);
    os << c.rt_mean << '\t' << c.rt_sd << '\t';
    os.precision(3);
    os << c.psi_r_rel << '\t' << c.omega_rel << '\t' << c.speedup << '\n';
  }
  return os.str();
}

}  // namespace nepr
