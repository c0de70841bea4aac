#pragma once

// End-to-end flow: layout, partition, floorplan, place, route, measure.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nepr/deposition.hpp"
#include "nepr/floorplan.hpp"
#include "nepr/metrics.hpp"
#include "nepr/partition.hpp"
#include "nepr/place.hpp"
#include "nepr/route.hpp"

namespace nepr {

enum class Approach : std::uint8_t { small, large_bfs, large_astar, large_astar_semantics, baseline_euclidean, baseline_manhattan };

std::string to_string(Approach a);
/// Throws ConfigError on unknown names.
Approach parse_approach(std::string_view s);
bool is_large(Approach a);
bool is_baseline(Approach a);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage failed; `stage` names it and `artifacts` lists what was written so far.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, std::vector<std::string> artifacts)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), artifacts_(std::move(artifacts)) {}
  const std::string& stage() const { return stage_; }
  const std::vector<std::string>& artifacts() const { return artifacts_; }

 private:
  std::string stage_;
  std::vector<std::string> artifacts_;
};

struct PipelineConfig {
  std::string circuit = "full_adder";  // builtin name, or a .nlc / .gnl path
  Approach approach = Approach::small;
  int blocks = 4;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0: one per block
  std::string out_dir;  // empty: keep everything in memory
  DepositionOptions deposition;
  FmOptions partition;
  FloorplanOptions floorplan;
  PlaceOptions place;
  bool virtual_pins = true;
  RouteOptions route;
  double alpha = kDefaultWireSpeed;
};

/// JSON rendering of every field; `config --dump` prints the defaults.
std::string dump_config(const PipelineConfig& cfg);
/// Unknown keys and ill-typed values are ConfigErrors. Missing keys keep `base`.
PipelineConfig parse_config(std::string_view json, const PipelineConfig& base = {});

/// Builtin circuit name, or a file ending in .nlc or .gnl.
LogicalCircuit load_circuit(const std::string& name);

struct PipelineResult {
  LogicalCircuit circuit;
  PhysicalLayout layout;
  PartitionResult partition;
  Floorplan floorplan;
  std::vector<BlockProblem> blocks;
  Placement placement;
  RoutingSolution routing;
  RouteStats route_stats;
  std::vector<PlaceStats> place_stats;
  RtLedger rt;
  MetricsReport metrics;
  std::vector<std::string> files;  // written artifacts, in order
  std::string partition_warning;
};

/// Runs the approach's stages. `small` and the baselines skip partitioning
/// and floorplanning. Files go to cfg.out_dir when it is set.
PipelineResult run_pipeline(const PipelineConfig& cfg, const LogicalCircuit& c);
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Hashes recorded in the `src` lines of a consistent artifact set. An absent
// floorplan is hashed as an empty document.
std::uint64_t layout_source(std::string_view netlist);
std::uint64_t partition_source(std::string_view netlist);
std::uint64_t floorplan_source(std::string_view partition, std::string_view layout);
std::uint64_t placement_source(std::string_view netlist, std::string_view layout, std::string_view floorplan);
std::uint64_t routing_source(std::string_view netlist, std::string_view layout, std::string_view placement);

// ---------------------------------------------------------------------------
// Benchmark harness

struct BenchConfig {
  PipelineConfig base;
  std::vector<std::string> circuits;
  std::vector<Approach> approaches;
  std::vector<std::uint64_t> seeds;
  Approach baseline = Approach::small;
};

struct BenchRow {
  std::string circuit;
  Approach approach = Approach::small;
  std::uint64_t seed = 0;
  MetricsReport metrics;
  double inter_wl = 0;
  std::string error;  // empty when the run succeeded
};

struct BenchCell {
  std::string circuit;
  Approach approach = Approach::small;
  int runs = 0;
  double psi_r_mean = 0, psi_r_sd = 0;
  double omega_mean = 0, omega_sd = 0;
  double rt_mean = 0, rt_sd = 0;  // per-instance seconds
  double et_mean = 0;
  double psi_r_rel = 0;  // vs the baseline approach on the same circuit
  double omega_rel = 0;
  double speedup = 0;    // baseline rt / this rt
  int failed_runs = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<BenchCell> cells;
};

BenchResult summarize(const std::vector<BenchRow>& rows, Approach baseline);
/// Runs every circuit x approach x seed; a failing run is recorded, not thrown.
BenchResult bench(const BenchConfig& cfg);
std::string format_bench(const BenchResult& r);

}  // namespace nepr
