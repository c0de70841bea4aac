#pragma once

// Grid maze routing of placed circuits with point insulators at crossings,
// plus the straight-line direct-connect baselines.

#include <cstdint>
#include <string>
#include <vector>

#include "nepr/floorplan.hpp"
#include "nepr/model.hpp"

namespace nepr {

/// max(d, rho/10).
double default_grid_spacing(double rho);

enum class VState : std::uint8_t { free, occupied, pin, blocked, crossed };

/// Directions in expansion order: +x, +y, -x, -y.
inline constexpr int kDirs = 4;
inline int opposite(int dir) { return (dir + 2) % 4; }
inline bool horizontal(int dir) { return dir % 2 == 0; }

/// Uniform grid over the substrate. Edge states: present, removed, reserved
/// for one net's pin (stored as `reserved(net)`), or used by a net (>= 0).
class GridGraph {
 public:
  static constexpr int kPresent = -1;
  static constexpr int kRemoved = -2;
  static constexpr int reserved(int net) { return -3 - net; }

  GridGraph() = default;
  GridGraph(double g, double width, double height);

  double g() const { return g_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int vertex_count() const { return nx_ * ny_; }
  int index(int ix, int iy) const { return iy * nx_ + ix; }
  int ix(int v) const { return v % nx_; }
  int iy(int v) const { return v / nx_; }
  Point point(int v) const;
  /// Vertex nearest to p, clamped to the grid.
  int nearest(Point p) const;

  int neighbor(int v, int dir) const;
  /// Edge between v and its neighbour in `dir`, -1 at the border.
  int edge_id(int v, int dir) const;
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int edge(int e) const { return edges_[e]; }
  void set_edge(int e, int s) { edges_[e] = s; }
  int edge_at(int v, int dir) const {
    int e = edge_id(v, dir);
    return e < 0 ? kRemoved : edges_[e];
  }
  int count_edges(int s) const;
  /// Edge leaving (x, y) in `dir`; the neighbour must exist.
  int edge_from(int x, int y, int dir) const {
    switch (dir) {
      case 0: return y * (nx_ - 1) + x;
      case 2: return y * (nx_ - 1) + x - 1;
      case 1: return hedges_ + y * nx_ + x;
      default: return hedges_ + (y - 1) * nx_ + x;
    }
  }

  VState state(int v) const { return state_[v]; }
  int net(int v) const { return net_[v]; }
  void set_vertex(int v, VState s, int net) {
    state_[v] = s;
    net_[v] = net;
  }

  /// Blocks vertices strictly inside `box` and removes edges crossing its interior.
  void carve(const Rect& box);
  /// Present edges at v become reserved for `net`, and back.
  void reserve_around(int v, int net);
  void reconnect(int v, int net);

 private:
  double g_ = 1.0;
  int nx_ = 0, ny_ = 0;
  int hedges_ = 0;
  std::vector<VState> state_;
  std::vector<int> net_;
  std::vector<int> edges_;  // horizontal edges first, then vertical ones
};

struct GridOptions {
  double g = 0.0;  // 0 picks default_grid_spacing(rho)
  bool route_over_unused = false;
};

/// Routing box of a physical component: its footprint box inflated by g/2.
Rect routing_box(const PhysicalComponent& c, double g);

struct RoutingGrid {
  GridGraph graph;
  std::vector<int> pin_vertex;  // per pin id, -1 if unmapped or unsnapped
  std::vector<Rect> boxes;
  std::vector<int> unsnapped;   // pins with no free vertex nearby
};

/// Discretizes the substrate, carves component boxes and snaps every mapped
/// pin to the nearest free vertex outside all boxes.
RoutingGrid build_grid(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m, const GridOptions& opt = {});

/// Ascending by the number of other nets' pins inside the pin bounding box,
/// then by id; large nets go last.
std::vector<int> order_nets(const LogicalCircuit& c, const RoutingGrid& grid);

/// Vertex-index window a router may use, optionally restricted to the
/// vertices one block owns.
struct Window {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive
  const std::vector<std::int16_t>* owner = nullptr;
  int block = -1;
  static Window whole(const GridGraph& g) { return {0, 0, g.nx() - 1, g.ny() - 1, nullptr, -1}; }
};

/// A routed path: vertices from source to the reached target, and the
/// vertices crossed over foreign wires.
struct GridPath {
  std::vector<int> vertices;
  std::vector<int> crossings;
  int length() const { return static_cast<int>(vertices.size()) - 1; }
};

/// Search workspace bound to one window. Not thread-safe; one per thread.
class Router {
 public:
  Router(GridGraph& g, Window w);

  /// Starts a new target set for `net`.
  void begin_net(int net);
  void add_target(int v);
  bool is_target(int v) const;

  /// Unit-cost breadth-first search from `source` to any target.
  bool bfs(int source, GridPath& out);
  /// Weighted A*: f = cost + weight * Manhattan distance to `goal`; stops at any target.
  bool astar(int source, int goal, double weight, GridPath& out);

  /// Marks the path's edges used, its vertices occupied, and its crossings.
  void commit(const GridPath& p);

  long expanded() const { return expanded_; }

 private:
  int local(int v) const;
  bool inside(int v) const;
  bool open(int lx, int ly, int v) const {
    return lx >= 0 && ly >= 0 && lx < width_ && ly < height_ && (!w_.owner || (*w_.owner)[v] == w_.block);
  }
  bool guarded(int lx, int ly, int u) const;
  int step(int lx, int ly, int v, int dir, bool& hit) const;
  bool start(int source, GridPath& out);
  bool unwind(int state, int source, GridPath& out) const;

  GridGraph& g_;
  Window w_;
  int nx_ = 0, width_ = 0, height_ = 0;
  int net_ = -1;
  std::uint32_t net_stamp_ = 0, search_stamp_ = 0;
  std::vector<std::uint32_t> target_;  // per local vertex
  std::vector<std::uint32_t> seen_;    // per state
  std::vector<int> parent_;            // per state
  std::vector<int> cost_;              // per state (A*)
  std::vector<int> queue_;
  long expanded_ = 0;
};

/// Geometry of a committed path: maximal straight wires and the insulators.
void emit_path(const GridGraph& g, const GridPath& p, int net, bool inter_block, std::vector<Wire>& wires,
               std::vector<Insulator>& insulators);

/// Result of routing one net (or one block's share of it).
struct NetRoute {
  int net = -1;
  std::vector<Insulator> insulators;
  std::vector<Wire> wires;
  std::vector<int> vertices;  // own vertices, pins included
  std::vector<int> pin_vertices;
  bool ok = true;
  std::string reason;
};

/// Prim order over the pin vertices, then BFS from each pin to the tree so far.
NetRoute route_net_bfs(Router& r, GridGraph& g, int net, const std::vector<int>& pin_vertices);

enum class InterMode : std::uint8_t { bfs, astar };

/// Joins a net's per-block subtrees: Prim over closest pin pairs, each
/// connection searched from the new subtree's pin to the tree built so far.
NetRoute route_interblock(Router& r, GridGraph& g, int net, const std::vector<NetRoute>& subtrees, InterMode mode,
                          double weight);

struct RouteOptions {
  GridOptions grid;
  InterMode inter = InterMode::astar;
  double astar_weight = 1.5;
};

struct RouteStats {
  double intra_seconds = 0, inter_seconds = 0;
  long expanded = 0;
  int inter_connections = 0;
};

/// Intra-block routing of each floorplan block (in parallel, `jobs` at a
/// time), stitched, then inter-block routing. A one-rect floorplan routes
/// everything with BFS on the whole grid.
RoutingSolution route_circuit(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m, const Floorplan& fp,
                              const RouteOptions& opt = {}, int jobs = 1, RouteStats* stats = nullptr);

/// Each net drawn as its MST over pin positions: straight segments for the
/// Euclidean metric, lower-L two-segment paths for Manhattan. Wires are
/// strips of width w; where two nets' strips meet, the overlap stretches
/// over some length l and takes max(1, ceil(l/w)) insulators.
RoutingSolution direct_connect(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m, Metric metric);

/// Insulators needed where the w-wide footprints of two segments meet (0 if apart).
int insulators_between(const Wire& a, const Wire& b, std::vector<Point>* where = nullptr);

}  // namespace nepr
