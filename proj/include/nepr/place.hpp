#pragma once

// Simulated-annealing placement of logical components onto deposited ones.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "nepr/floorplan.hpp"
#include "nepr/model.hpp"
#include "nepr/partition.hpp"
#include "nepr/rng.hpp"

namespace nepr {

/// Geometric cooling from t0 to epsilon in exactly `iterations` steps, with
/// the neighbour distance shrinking linearly in ln T from d_max to d_min.
struct SASchedule {
  double t0 = 1.0;
  double k_t = 1.0;
  double epsilon = 1e-3;
  long iterations = 0;
  double d_max = 1.0;
  double d_min = 1.0;

  static SASchedule make(double t0, long iterations, double d_max, double d_min, double epsilon_ratio = 1e-3);
  double temperature(long step) const { return t0 * std::pow(k_t, static_cast<double>(step)); }
  double neighbor_distance(double temperature) const;
};

struct VirtualPin {
  int net = -1;
  int block = -1;
  Point position;
  friend bool operator==(const VirtualPin&, const VirtualPin&) = default;
};

/// One virtual pin per (inter-block net, block). `io_owner` (optional) adds
/// the blocks owning a net's I/O pins to its span.
std::vector<VirtualPin> compute_virtual_pins(const LogicalCircuit& c, const PartitionResult& p, const Floorplan& fp,
                                             const std::vector<int>& io_owner = {});

/// Sum over non-large nets of the Manhattan MST over mapped pins plus the
/// net's virtual pins.
double placement_cost(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m,
                      const std::vector<VirtualPin>& vpins = {});

/// The slice of the problem one placer works on.
struct BlockProblem {
  int block = 0;
  std::vector<int> comps;  // logical components
  std::vector<int> ios;    // logical io pins
  std::vector<int> phys;   // available physical components
  std::vector<int> slots;  // available io slots
  double d_max = 1.0;
  std::map<int, Point> vpins;  // net -> virtual pin
};

struct PlaceOptions {
  double iters_scale = 1.0;   // T_N = iters_scale * N^2
  long iterations = -1;       // overrides iters_scale when >= 0
  double epsilon_ratio = 1e-3;
  int audit_every = 0;        // recompute the full cost every k steps and compare
};

/// Candidate change to the mapping: relocation of one entry or a swap of two.
struct Move {
  bool io = false;
  int a = -1;        // local index of the moved logical entry
  int target = -1;   // local physical index (component or slot)
  int b = -1;        // local index of the displaced entry, -1 for a relocation
};

class BlockPlacer {
 public:
  BlockPlacer(const LogicalCircuit& c, const PhysicalLayout& layout, BlockProblem problem);

  /// Random type-matched injective start; throws if types run short.
  void randomize(Rng& rng);
  Move propose(Rng& rng, double d_n) const;
  double delta(const Move& m);
  void apply(const Move& m);
  double cost() const { return cost_; }
  double full_cost() const;
  double rho() const { return layout_.rho; }
  int mapping_count() const { return static_cast<int>(prob_.comps.size() + prob_.ios.size()); }

  /// Same-type physical components within `d` of local physical `j`, excluding `j`.
  std::vector<int> neighbors_within(int j, double d) const;
  int nearest_same_type(int j) const { return nearest_[j]; }

  const BlockProblem& problem() const { return prob_; }
  /// Local physical index per local component / slot index per local io.
  const std::vector<int>& comp_assignment() const { return comp_at_; }
  const std::vector<int>& io_assignment() const { return io_at_; }
  void write_to(Placement& out) const;
  int affected_nets(const Move& m, int* out) const;

 private:
  double net_cost(int local_net) const;
  void swap_state(const Move& m);
  int pick_slot(int cur, double d_n, Rng& rng) const;
  int pick_component(int j, double d_n, Rng& rng) const;

  const LogicalCircuit& c_;
  const PhysicalLayout& layout_;
  BlockProblem prob_;

  // Local nets: pin references are (kind, local index, pin slot).
  struct LocalPin {
    bool io;
    int index;
    int slot;
  };
  struct LocalNet {
    std::vector<LocalPin> pins;
    bool has_vpin = false;
    Point vpin;
  };
  std::vector<LocalNet> nets_;
  std::vector<std::array<int, 3>> comp_nets_;  // local comp -> local nets (-1 if none)
  std::vector<int> io_net_;                    // local io -> local net (-1 if none)
  std::vector<double> net_cost_;

  std::vector<std::array<Point, 3>> phys_pins_;
  std::vector<Point> slot_pos_;
  std::vector<Kind> phys_kind_;
  std::vector<Kind> comp_kind_;
  std::array<std::vector<int>, 2> by_kind_;
  std::vector<int> nearest_;
  // Uniform bucket grid over physical centres, per kind.
  double cell_ = 1.0;
  double gx0_ = 0, gy0_ = 0;
  int gw_ = 1, gh_ = 1;
  std::array<std::vector<std::vector<int>>, 2> grid_;

  std::vector<int> comp_at_, io_at_;          // local logical -> local physical
  std::vector<int> phys_owner_, slot_owner_;  // local physical -> local logical or -1
  double cost_ = 0.0;
};

struct PlaceStats {
  double t0 = 0;
  long iterations = 0;
  long accepted = 0;
  double initial_cost = 0, final_cost = 0;
  double max_audit_error = 0;
};

/// Algorithm 1 on one block.
PlaceStats place_sa(BlockPlacer& placer, const PlaceOptions& opt, Rng rng);

/// Picks an owner block per io pin: the block holding most of its net's pins
/// that still has a free slot, else the nearest block with one.
std::vector<int> assign_io_owners(const LogicalCircuit& c, const PartitionResult& p, const Floorplan& fp,
                                  const PhysicalLayout& layout);

/// Splits the problem into blocks (one block when `fp` holds a single rect).
std::vector<BlockProblem> make_block_problems(const LogicalCircuit& c, const PhysicalLayout& layout, const PartitionResult& p,
                                              const Floorplan& fp, bool virtual_pins);

/// Places all blocks, `jobs` at a time. Block b uses stream (seed, b).
Placement place_blocks(const LogicalCircuit& c, const PhysicalLayout& layout, const std::vector<BlockProblem>& blocks,
                       const PlaceOptions& opt, std::uint64_t seed, int jobs, std::vector<PlaceStats>* stats = nullptr);

/// Single full-substrate floorplan for the small-circuit flow.
Floorplan whole_substrate(const PhysicalLayout& layout);

}  // namespace nepr
