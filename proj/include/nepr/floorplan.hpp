#pragma once

// Slicing-tree floorplanning of partition blocks onto the substrate.

#include <cstdint>
#include <string>
#include <vector>

#include "nepr/model.hpp"
#include "nepr/partition.hpp"

namespace nepr {

/// Binary slicing tree. Leaves carry a block id; internal nodes a cut.
/// A vertical cut splits the width, a horizontal cut the height, in
/// proportion to the total block sizes of the two sides.
struct SlicingTree {
  struct Node {
    int left = -1;
    int right = -1;
    int block = -1;  // >= 0 for leaves
    bool vertical = true;
    friend bool operator==(const Node&, const Node&) = default;
  };
  std::vector<Node> nodes;
  int root = -1;

  bool is_leaf(int n) const { return nodes[n].block >= 0; }
  /// Postfix rendering: block ids and 'V'/'H' operators.
  std::string polish() const;
  static SlicingTree from_polish(std::string_view expr);
  friend bool operator==(const SlicingTree&, const SlicingTree&) = default;
};

struct Floorplan {
  double width = 0.0;
  double height = 0.0;
  std::vector<Rect> rects;  // per block
  SlicingTree tree;

  friend bool operator==(const Floorplan&, const Floorplan&) = default;
};

class FloorplanError : public SemanticError {
 public:
  using SemanticError::SemanticError;
};

/// Tiles `region` following `tree`, with areas proportional to `weight` per block.
/// Cut coordinates are rounded to the file resolution so neighbours share edges exactly.
std::vector<Rect> evaluate_tree(const SlicingTree& tree, const std::vector<double>& weight, Rect region);

/// Block whose rectangle contains `p` (half-open); nearest rectangle if none does.
int block_at(const Floorplan& fp, Point p);

/// Physical components per block, by centre position.
std::vector<std::vector<int>> components_by_block(const Floorplan& fp, const PhysicalLayout& layout);

/// Sum over inter-block nets of the HPWL of the centres of the touched block rectangles.
double estimate_interblock_wl(const LogicalCircuit& c, const PartitionResult& p, const Floorplan& fp);

/// Every block has, for each type, at least ceil((1+margin)*need) physical components.
bool check_feasible(const Floorplan& fp, const PartitionResult& p, const LogicalCircuit& c, const PhysicalLayout& layout,
                    double margin = 0.1);

struct FloorplanOptions {
  double margin = 0.1;
  int init_attempts = 200;
};

/// Per annealing run: the starting cost, then the best cost after each step.
struct FloorplanStats {
  std::vector<std::vector<double>> best_trace;
};

/// Simulated annealing over slicing trees. Semantic partitions are planned
/// in two levels: modules over the substrate, then blocks inside each module.
Floorplan floorplan_sa(const LogicalCircuit& c, const PartitionResult& p, const PhysicalLayout& layout, std::uint64_t seed,
                       const FloorplanOptions& opt = {}, FloorplanStats* stats = nullptr);

/// `.fpl` format:
///   fpl 1
///   substrate <W> <H>
///   tree <postfix>
///   rect <block> <x> <y> <w> <h>
std::string serialize_floorplan(const Floorplan& fp);
Floorplan parse_floorplan(std::string_view text);

}  // namespace nepr
