#include "nepr/route.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

namespace nepr {

namespace {

constexpr int kDx[kDirs] = {1, 0, -1, 0};
constexpr int kDy[kDirs] = {0, 1, 0, -1};
constexpr double kEps = 1e-9;

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

int direction(const GridGraph& g, int a, int b) {
  const int dx = g.ix(b) - g.ix(a), dy = g.iy(b) - g.iy(a);
  for (int d = 0; d < kDirs; ++d)
    if (kDx[d] == dx && kDy[d] == dy) return d;
  return -1;
}

}  // namespace

double default_grid_spacing(double rho) { return std::max(kMinSeparation, rho / 10.0); }

// ---------------------------------------------------------------------------
// GridGraph

GridGraph::GridGraph(double g, double width, double height) : g_(g) {
  if (!(g > 0)) throw SemanticError("grid spacing must be positive");
  nx_ = static_cast<int>(std::floor(width / g + kEps)) + 1;
  ny_ = static_cast<int>(std::floor(height / g + kEps)) + 1;
  hedges_ = (nx_ - 1) * ny_;
  state_.assign(static_cast<std::size_t>(nx_) * ny_, VState::free);
  net_.assign(state_.size(), -1);
  edges_.assign(static_cast<std::size_t>(nx_ - 1) * ny_ + static_cast<std::size_t>(nx_) * (ny_ - 1), kPresent);
}

Point GridGraph::point(int v) const { return {quantize(ix(v) * g_), quantize(iy(v) * g_)}; }

int GridGraph::nearest(Point p) const {
  int x = std::clamp(static_cast<int>(std::lround(p.x / g_)), 0, nx_ - 1);
  int y = std::clamp(static_cast<int>(std::lround(p.y / g_)), 0, ny_ - 1);
  return index(x, y);
}

int GridGraph::neighbor(int v, int dir) const {
  const int x = ix(v) + kDx[dir], y = iy(v) + kDy[dir];
  if (x < 0 || y < 0 || x >= nx_ || y >= ny_) return -1;
  return index(x, y);
}

int GridGraph::edge_id(int v, int dir) const {
  const int x = ix(v), y = iy(v);
  const int h = (nx_ - 1) * ny_;
  switch (dir) {
    case 0: return x + 1 < nx_ ? y * (nx_ - 1) + x : -1;
    case 2: return x > 0 ? y * (nx_ - 1) + x - 1 : -1;
    case 1: return y + 1 < ny_ ? h + y * nx_ + x : -1;
    default: return y > 0 ? h + (y - 1) * nx_ + x : -1;
  }
}

int GridGraph::count_edges(int s) const { return static_cast<int>(std::count(edges_.begin(), edges_.end(), s)); }

void GridGraph::carve(const Rect& box) {
  const double x0 = box.x, x1 = box.x + box.w, y0 = box.y, y1 = box.y + box.h;
  const int ia = std::max(0, static_cast<int>(std::floor(x0 / g_))), ib = std::min(nx_ - 1, static_cast<int>(std::ceil(x1 / g_)));
  const int ja = std::max(0, static_cast<int>(std::floor(y0 / g_))), jb = std::min(ny_ - 1, static_cast<int>(std::ceil(y1 / g_)));
  auto in_x = [&](int i) { return i * g_ > x0 + kEps && i * g_ < x1 - kEps; };
  auto in_y = [&](int j) { return j * g_ > y0 + kEps && j * g_ < y1 - kEps; };
  for (int j = ja; j <= jb; ++j) {
    for (int i = ia; i <= ib; ++i) {
      const int v = index(i, j);
      if (in_x(i) && in_y(j)) state_[v] = VState::blocked;
      // edge to +x crosses the open box when its row is strictly inside
      if (i + 1 < nx_ && in_y(j) && i * g_ < x1 - kEps && (i + 1) * g_ > x0 + kEps) edges_[edge_id(v, 0)] = kRemoved;
      if (j + 1 < ny_ && in_x(i) && j * g_ < y1 - kEps && (j + 1) * g_ > y0 + kEps) edges_[edge_id(v, 1)] = kRemoved;
    }
  }
}

void GridGraph::reserve_around(int v, int net) {
  for (int d = 0; d < kDirs; ++d) {
    int e = edge_id(v, d);
    if (e >= 0 && edges_[e] == kPresent) edges_[e] = reserved(net);
  }
}

void GridGraph::reconnect(int v, int net) {
  for (int d = 0; d < kDirs; ++d) {
    int e = edge_id(v, d);
    if (e >= 0 && edges_[e] == reserved(net)) edges_[e] = kPresent;
  }
}

// ---------------------------------------------------------------------------

Rect routing_box(const PhysicalComponent& c, double g) {
  Rect b = body_box(c);
  return {b.x - g / 2, b.y - g / 2, b.w + g, b.h + g};
}

RoutingGrid build_grid(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m, const GridOptions& opt) {
  const double g = opt.g > 0 ? opt.g : default_grid_spacing(layout.rho);
  if (g < kMinSeparation - kEps) throw SemanticError("grid spacing " + fmt3(g) + " is below the wire separation");
  RoutingGrid rg;
  rg.graph = GridGraph(g, layout.width, layout.height);
  GridGraph& G = rg.graph;
  std::vector<char> mapped(layout.components.size(), 0);
  for (int p : m.comp_map)
    if (p >= 0) mapped[p] = 1;
  for (const auto& pc : layout.components) {
    if (!mapped[pc.id] && opt.route_over_unused) continue;
    rg.boxes.push_back(routing_box(pc, g));
    G.carve(rg.boxes.back());
  }
  rg.pin_vertex.assign(c.pin_count(), -1);
  for (int pin = 0; pin < c.pin_count(); ++pin) {
    auto at = pin_location(c, layout, m, pin);
    if (!at) continue;
    const int net = c.net_of_pin(pin);
    const int cx = static_cast<int>(std::lround(at->x / g)), cy = static_cast<int>(std::lround(at->y / g));
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int radius : {2}) {
      for (int y = std::max(0, cy - radius); y <= std::min(G.ny() - 1, cy + radius); ++y) {
        for (int x = std::max(0, cx - radius); x <= std::min(G.nx() - 1, cx + radius); ++x) {
          const int v = G.index(x, y);
          const VState s = G.state(v);
          if (!(s == VState::free || (s == VState::pin && G.net(v) == net))) continue;
          const double d = euclidean(*at, G.point(v));
          if (d < best_d - kEps) {
            best_d = d;
            best = v;
          }
        }
      }
      if (best >= 0) break;
    }
    if (best < 0) {
      rg.unsnapped.push_back(pin);
      continue;
    }
    rg.pin_vertex[pin] = best;
    G.set_vertex(best, VState::pin, net);
    G.reserve_around(best, net);
  }
  return rg;
}

std::vector<int> order_nets(const LogicalCircuit& c, const RoutingGrid& rg) {
  const GridGraph& G = rg.graph;
  const int nx = G.nx(), ny = G.ny();
  // 2-D prefix sums of pin counts per vertex.
  std::vector<int> sum(static_cast<std::size_t>(nx + 1) * (ny + 1), 0);
  auto at = [&](int x, int y) -> int& { return sum[static_cast<std::size_t>(y) * (nx + 1) + x]; };
  for (int v : rg.pin_vertex)
    if (v >= 0) ++at(G.ix(v) + 1, G.iy(v) + 1);
  for (int y = 1; y <= ny; ++y)
    for (int x = 1; x <= nx; ++x) at(x, y) += at(x - 1, y) + at(x, y - 1) - at(x - 1, y - 1);
  struct Key {
    bool large;
    long foreign;
    int id;
  };
  std::vector<Key> keys;
  for (const auto& net : c.nets()) {
    int x0 = nx, y0 = ny, x1 = -1, y1 = -1, own = 0;
    for (int pin : net.members) {
      int v = rg.pin_vertex[pin];
      if (v < 0) continue;
      ++own;
      x0 = std::min(x0, G.ix(v));
      y0 = std::min(y0, G.iy(v));
      x1 = std::max(x1, G.ix(v));
      y1 = std::max(y1, G.iy(v));
    }
    long foreign = 0;
    if (own > 0) foreign = at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0) - own;
    keys.push_back({net.is_large, foreign, net.id});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.large != b.large) return !a.large;
    if (a.foreign != b.foreign) return a.foreign < b.foreign;
    return a.id < b.id;
  });
  std::vector<int> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(k.id);
  return out;
}

// ---------------------------------------------------------------------------
// Router

Router::Router(GridGraph& g, Window w) : g_(g), w_(w) {
  w_.x0 = std::max(0, w_.x0);
  w_.y0 = std::max(0, w_.y0);
  w_.x1 = std::min(g.nx() - 1, w_.x1);
  w_.y1 = std::min(g.ny() - 1, w_.y1);
  nx_ = g.nx();
  width_ = std::max(0, w_.x1 - w_.x0 + 1);
  height_ = std::max(0, w_.y1 - w_.y0 + 1);
  const std::size_t area = static_cast<std::size_t>(width_) * height_;
  target_.assign(area, 0);
  seen_.assign(area * 5, 0);
  parent_.assign(area * 5, -1);
  cost_.assign(area * 5, 0);
}

int Router::local(int v) const { return (g_.iy(v) - w_.y0) * width_ + (g_.ix(v) - w_.x0); }

bool Router::inside(int v) const {
  const int x = g_.ix(v), y = g_.iy(v);
  if (x < w_.x0 || x > w_.x1 || y < w_.y0 || y > w_.y1) return false;
  return !w_.owner || (*w_.owner)[v] == w_.block;
}

void Router::begin_net(int net) {
  net_ = net;
  if (++net_stamp_ == 0) {
    std::fill(target_.begin(), target_.end(), 0);
    net_stamp_ = 1;
  }
}

void Router::add_target(int v) {
  if (inside(v)) target_[local(v)] = net_stamp_;
}

bool Router::is_target(int v) const { return inside(v) && target_[local(v)] == net_stamp_; }

// Within two straight steps of a foreign pin still waiting for its net, a
// wire must pass straight so the pin can later cross it on its way out.
bool Router::guarded(int lx, int ly, int u) const {
  auto foreign = [&](int e) { return e <= GridGraph::reserved(0) && e != GridGraph::reserved(net_); };
  const int x = w_.x0 + lx, y = w_.y0 + ly;
  for (int d = 0; d < kDirs; ++d) {
    if (!open(lx + kDx[d], ly + kDy[d], u + kDx[d] + kDy[d] * nx_)) continue;
    const int e = g_.edge(g_.edge_from(x, y, d));
    if (foreign(e)) return true;
    if (e == GridGraph::kRemoved) continue;
    const int w = u + kDx[d] + kDy[d] * nx_;
    const VState s = g_.state(w);
    if (s != VState::free && s != VState::occupied) continue;
    if (!open(lx + 2 * kDx[d], ly + 2 * kDy[d], w + kDx[d] + kDy[d] * nx_)) continue;
    if (foreign(g_.edge(g_.edge_from(x + kDx[d], y + kDy[d], d)))) return true;
  }
  return false;
}

int Router::step(int lx, int ly, int v, int dir, bool& hit) const {
  const int nlx = lx + kDx[dir], nly = ly + kDy[dir];
  const int u = v + kDx[dir] + kDy[dir] * nx_;
  if (!open(nlx, nly, u)) return -1;
  const int x = w_.x0 + lx, y = w_.y0 + ly;
  if (g_.edge(g_.edge_from(x, y, dir)) != GridGraph::kPresent) return -1;
  const int lu = nly * width_ + nlx;
  switch (g_.state(u)) {
    case VState::free:
      return guarded(nlx, nly, u) ? lu * 5 + 1 + dir : lu * 5;
    case VState::pin:
      if (g_.net(u) != net_) return -1;
      hit = target_[lu] == net_stamp_;
      return lu * 5;
    case VState::occupied: {
      if (g_.net(u) == net_) {
        if (target_[lu] != net_stamp_) return -1;
        hit = true;
        return lu * 5;
      }
      // Straight through a foreign wire that runs along the other axis.
      if (!open(nlx + kDx[dir], nly + kDy[dir], u + kDx[dir] + kDy[dir] * nx_)) return -1;
      if (g_.edge(g_.edge_from(x + kDx[dir], y + kDy[dir], dir)) != GridGraph::kPresent) return -1;
      return lu * 5 + 1 + dir;
    }
    default:
      return -1;
  }
}

bool Router::unwind(int state, int source, GridPath& out) const {
  out.vertices.clear();
  out.crossings.clear();
  for (int s = state; s >= 0; s = parent_[s]) {
    const int lv = s / 5;
    const int v = g_.index(w_.x0 + lv % width_, w_.y0 + lv / width_);
    out.vertices.push_back(v);
    if (s % 5 && g_.state(v) == VState::occupied) out.crossings.push_back(v);
  }
  std::reverse(out.vertices.begin(), out.vertices.end());
  std::reverse(out.crossings.begin(), out.crossings.end());
  return !out.vertices.empty() && out.vertices.front() == source;
}

bool Router::start(int source, GridPath& out) {
  if (!inside(source)) return false;
  if (is_target(source)) {
    out.vertices = {source};
    out.crossings.clear();
    return true;
  }
  if (++search_stamp_ == 0) {
    std::fill(seen_.begin(), seen_.end(), 0);
    search_stamp_ = 1;
  }
  return false;
}

bool Router::bfs(int source, GridPath& out) {
  if (!inside(source)) return false;
  if (start(source, out)) return true;
  queue_.clear();
  const int s0 = local(source) * 5;
  seen_[s0] = search_stamp_;
  parent_[s0] = -1;
  queue_.push_back(s0);
  for (std::size_t head = 0; head < queue_.size(); ++head) {
    const int s = queue_[head];
    ++expanded_;
    const int lv = s / 5, kind = s - lv * 5;
    const int ly = lv / width_, lx = lv - ly * width_;
    const int v = (w_.y0 + ly) * nx_ + w_.x0 + lx;
    for (int d = kind ? kind - 1 : 0; d < (kind ? kind : kDirs); ++d) {
      bool hit = false;
      const int ns = step(lx, ly, v, d, hit);
      if (ns < 0 || seen_[ns] == search_stamp_) continue;
      seen_[ns] = search_stamp_;
      parent_[ns] = s;
      if (hit) return unwind(ns, source, out);
      queue_.push_back(ns);
    }
  }
  return false;
}

bool Router::astar(int source, int goal, double weight, GridPath& out) {
  if (!inside(source)) return false;
  if (start(source, out)) return true;
  struct Entry {
    double f;
    long seq;
    int state;
    int cost;
  };
  auto worse = [](const Entry& a, const Entry& b) { return a.f > b.f || (a.f == b.f && a.seq > b.seq); };
  std::vector<Entry> heap;
  const int gx = g_.ix(goal) - w_.x0, gy = g_.iy(goal) - w_.y0;
  long seq = 0;
  const int s0 = local(source) * 5;
  seen_[s0] = search_stamp_;
  parent_[s0] = -1;
  cost_[s0] = 0;
  heap.push_back({weight * (std::abs(g_.ix(source) - w_.x0 - gx) + std::abs(g_.iy(source) - w_.y0 - gy)), seq++, s0, 0});
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), worse);
    const Entry e = heap.back();
    heap.pop_back();
    if (e.cost != cost_[e.state]) continue;
    const int lv = e.state / 5, kind = e.state - lv * 5;
    const int ly = lv / width_, lx = lv - ly * width_;
    const int v = (w_.y0 + ly) * nx_ + w_.x0 + lx;
    if (kind == 0 && v != source && target_[lv] == net_stamp_) return unwind(e.state, source, out);
    ++expanded_;
    for (int d = kind ? kind - 1 : 0; d < (kind ? kind : kDirs); ++d) {
      bool hit = false;
      const int ns = step(lx, ly, v, d, hit);
      if (ns < 0) continue;
      const int nc = e.cost + 1;
      if (seen_[ns] == search_stamp_ && cost_[ns] <= nc) continue;
      seen_[ns] = search_stamp_;
      cost_[ns] = nc;
      parent_[ns] = e.state;
      const int h = std::abs(lx + kDx[d] - gx) + std::abs(ly + kDy[d] - gy);
      heap.push_back({nc + weight * h, seq++, ns, nc});
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  }
  return false;
}

void Router::commit(const GridPath& p) {
  for (std::size_t i = 0; i + 1 < p.vertices.size(); ++i) {
    const int a = p.vertices[i];
    const int d = direction(g_, a, p.vertices[i + 1]);
    g_.set_edge(g_.edge_id(a, d), net_);
  }
  std::size_t k = 0;
  for (int v : p.vertices) {
    if (k < p.crossings.size() && p.crossings[k] == v) {
      g_.set_vertex(v, VState::crossed, g_.net(v));
      ++k;
      continue;
    }
    if (g_.state(v) == VState::free) g_.set_vertex(v, VState::occupied, net_);
    add_target(v);
  }
}

void emit_path(const GridGraph& g, const GridPath& p, int net, bool inter_block, std::vector<Wire>& wires,
               std::vector<Insulator>& insulators) {
  for (int v : p.crossings) insulators.push_back({g.point(v)});
  if (p.vertices.size() < 2) return;
  std::size_t start = 0;
  int dir = direction(g, p.vertices[0], p.vertices[1]);
  for (std::size_t i = 1; i < p.vertices.size(); ++i) {
    const bool last = i + 1 == p.vertices.size();
    const int next = last ? -1 : direction(g, p.vertices[i], p.vertices[i + 1]);
    if (last || next != dir) {
      wires.push_back({g.point(p.vertices[start]), g.point(p.vertices[i]), net, inter_block});
      start = i;
      dir = next;
    }
  }
}

// ---------------------------------------------------------------------------

NetRoute route_net_bfs(Router& r, GridGraph& g, int net, const std::vector<int>& pins) {
  NetRoute out;
  out.net = net;
  out.pin_vertices = pins;
  if (pins.empty()) return out;
  r.begin_net(net);
  for (int v : pins) g.reconnect(v, net);
  std::vector<Point> pts;
  for (int v : pins) pts.push_back(g.point(v));
  const auto tree = prim_tree(pts, Metric::manhattan, 0);
  r.add_target(pins[tree.order[0]]);
  out.vertices.push_back(pins[tree.order[0]]);
  GridPath path;
  for (std::size_t k = 1; k < tree.order.size(); ++k) {
    const int v = pins[tree.order[k]];
    if (r.is_target(v)) continue;
    if (!r.bfs(v, path)) {
      out.ok = false;
      out.reason = "bfs-exhausted";
      continue;
    }
    r.commit(path);
    emit_path(g, path, net, false, out.wires, out.insulators);
    for (int u : path.vertices)
      if (g.state(u) != VState::crossed) out.vertices.push_back(u);
  }
  return out;
}

NetRoute route_interblock(Router& r, GridGraph& g, int net, const std::vector<NetRoute>& subtrees, InterMode mode,
                          double weight) {
  constexpr std::size_t kInterRetries = 4;
  NetRoute out;
  out.net = net;
  const int k = static_cast<int>(subtrees.size());
  if (k < 2) return out;
  // Closest pin pair between every two subtrees, in grid steps.
  struct Pair {
    int dist = std::numeric_limits<int>::max();
    int from = -1, to = -1;  // vertices in subtree i and j
  };
  std::vector<Pair> best(static_cast<std::size_t>(k) * k);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      Pair p;
      for (int a : subtrees[i].pin_vertices) {
        for (int b : subtrees[j].pin_vertices) {
          int d = std::abs(g.ix(a) - g.ix(b)) + std::abs(g.iy(a) - g.iy(b));
          if (d < p.dist) p = {d, a, b};
        }
      }
      best[i * k + j] = p;
      best[j * k + i] = {p.dist, p.to, p.from};
    }
  }
  r.begin_net(net);
  std::vector<char> joined(k, 0);
  joined[0] = 1;
  for (int v : subtrees[0].vertices) r.add_target(v);
  GridPath path;
  for (int added = 1; added < k; ++added) {
    int bi = -1, bj = -1;
    for (int i = 0; i < k; ++i) {
      if (!joined[i]) continue;
      for (int j = 0; j < k; ++j) {
        if (joined[j] || best[i * k + j].from < 0) continue;
        if (bi < 0 || best[i * k + j].dist < best[bi * k + bj].dist) bi = i, bj = j;
      }
    }
    if (bi < 0) break;
    joined[bj] = 1;
    const Pair& p = best[bi * k + bj];
    const int goal = p.from;
    // A pin boxed in by its block's wires can fail; retry from the subtree's
    // other pins, nearest to the goal first.
    std::vector<int> sources = subtrees[bj].pin_vertices;
    auto gap = [&](int v) { return std::abs(g.ix(v) - g.ix(goal)) + std::abs(g.iy(v) - g.iy(goal)); };
    std::stable_sort(sources.begin(), sources.end(), [&](int a, int b) { return gap(a) < gap(b); });
    if (std::find(sources.begin(), sources.end(), p.to) != sources.end())
      std::rotate(sources.begin(), std::find(sources.begin(), sources.end(), p.to), std::find(sources.begin(), sources.end(), p.to) + 1);
    if (sources.size() > kInterRetries) sources.resize(kInterRetries);
    bool found = false;
    for (int source : sources) {
      found = mode == InterMode::astar ? r.astar(source, goal, weight, path) : r.bfs(source, path);
      if (found) break;
    }
    if (!found) {
      out.ok = false;
      out.reason = mode == InterMode::astar ? "astar-exhausted" : "bfs-exhausted";
    } else {
      r.commit(path);
      emit_path(g, path, net, true, out.wires, out.insulators);
      for (int u : path.vertices)
        if (g.state(u) != VState::crossed) out.vertices.push_back(u);
    }
    for (int v : subtrees[bj].vertices) r.add_target(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

RoutingSolution route_circuit(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m, const Floorplan& fp,
                              const RouteOptions& opt, int jobs, RouteStats* stats) {
  auto t_start = std::chrono::steady_clock::now();
  RoutingGrid rg = build_grid(c, layout, m, opt.grid);
  GridGraph& G = rg.graph;
  const int B = std::max<int>(1, static_cast<int>(fp.rects.size()));
  std::vector<std::int16_t> owner;
  if (B > 1) {
    owner.resize(G.vertex_count());
    for (int v = 0; v < G.vertex_count(); ++v) owner[v] = static_cast<std::int16_t>(block_at(fp, G.point(v)));
  }
  RoutingSolution sol;
  sol.grid = G.g();
  for (int pin = 0; pin < c.pin_count(); ++pin)
    if (rg.pin_vertex[pin] >= 0) sol.stubs.push_back({pin, G.point(rg.pin_vertex[pin])});

  const auto order = order_nets(c, rg);
  std::vector<char> unsnapped(c.net_count(), 0);
  for (int pin : rg.unsnapped) unsnapped[c.net_of_pin(pin)] = 1;

  // Per block: (net, pin vertices) in routing order.
  std::vector<std::vector<std::pair<int, std::vector<int>>>> work(B);
  std::vector<int> spans(c.net_count(), 0);
  for (int net : order) {
    std::map<int, std::vector<int>> groups;
    for (int pin : c.nets()[net].members) {
      const int v = rg.pin_vertex[pin];
      if (v < 0) continue;
      groups[B > 1 ? owner[v] : 0].push_back(v);
    }
    spans[net] = static_cast<int>(groups.size());
    for (auto& [b, pins] : groups) work[b].emplace_back(net, std::move(pins));
  }

  std::vector<std::vector<NetRoute>> done(B);
  std::atomic<int> next{0};
  std::vector<long> expanded(B, 0);
  auto worker = [&] {
    for (int b; (b = next.fetch_add(1)) < B;) {
      Window w = Window::whole(G);
      if (B > 1) {
        const Rect& r = fp.rects[b];
        w = {static_cast<int>(std::floor(r.x / G.g())) - 1, static_cast<int>(std::floor(r.y / G.g())) - 1,
             static_cast<int>(std::ceil((r.x + r.w) / G.g())) + 1, static_cast<int>(std::ceil((r.y + r.h) / G.g())) + 1,
             &owner, b};
      }
      Router router(G, w);
      for (const auto& [net, pins] : work[b]) done[b].push_back(route_net_bfs(router, G, net, pins));
      expanded[b] = router.expanded();
    }
  };
  const int threads = std::clamp(jobs, 1, B);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  const double intra = seconds_since(t_start);

  std::vector<char> failed(c.net_count(), 0);
  auto fail = [&](int net, const std::string& reason) {
    if (failed[net]) return;
    failed[net] = 1;
    sol.failures.push_back({net, reason});
  };
  for (int net : order)
    if (unsnapped[net]) fail(net, "no-pin-vertex");
  std::vector<std::vector<const NetRoute*>> parts(c.net_count());
  for (int b = 0; b < B; ++b) {
    for (const auto& nr : done[b]) {
      for (const auto& ins : nr.insulators) sol.sequence.emplace_back(ins);
      for (const auto& w : nr.wires) sol.sequence.emplace_back(w);
      if (!nr.ok) fail(nr.net, nr.reason);
      parts[nr.net].push_back(&nr);
    }
  }

  auto t_inter = std::chrono::steady_clock::now();
  int connections = 0;
  long inter_expanded = 0;
  if (B > 1) {
    Router router(G, Window::whole(G));
    for (int net : order) {
      if (spans[net] < 2) continue;
      std::vector<NetRoute> subtrees;
      for (const NetRoute* p : parts[net]) subtrees.push_back(*p);
      NetRoute nr = route_interblock(router, G, net, subtrees, opt.inter, opt.astar_weight);
      connections += spans[net] - 1;
      for (const auto& ins : nr.insulators) sol.sequence.emplace_back(ins);
      for (const auto& w : nr.wires) sol.sequence.emplace_back(w);
      if (!nr.ok) fail(net, nr.reason);
    }
    inter_expanded = router.expanded();
  }
  if (stats) {
    stats->intra_seconds = intra;
    stats->inter_seconds = seconds_since(t_inter);
    stats->expanded = inter_expanded;
    for (long e : expanded) stats->expanded += e;
    stats->inter_connections = connections;
  }
  std::sort(sol.failures.begin(), sol.failures.end(), [](const RouteFailure& a, const RouteFailure& b) { return a.net < b.net; });
  return sol;
}

// ---------------------------------------------------------------------------
// Direct connection baselines

namespace {

// Footprint of a wire of width w along its centerline, flat ends.
std::vector<Point> strip(const Wire& s) {
  const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
  const double len = std::hypot(dx, dy);
  const double h = kWireWidth / 2;
  const double nx = -dy / len * h, ny = dx / len * h;
  return {{s.a.x + nx, s.a.y + ny}, {s.b.x + nx, s.b.y + ny}, {s.b.x - nx, s.b.y - ny}, {s.a.x - nx, s.a.y - ny}};
}

// Sutherland-Hodgman against a convex counter-clockwise or clockwise polygon;
// boundaries count as inside so touching footprints leave a degenerate piece.
std::vector<Point> clip(std::vector<Point> poly, const std::vector<Point>& by) {
  double area = 0;
  for (std::size_t i = 0; i < by.size(); ++i) {
    const Point& p = by[i];
    const Point& q = by[(i + 1) % by.size()];
    area += p.x * q.y - q.x * p.y;
  }
  const double orient = area >= 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < by.size() && !poly.empty(); ++i) {
    const Point p = by[i], q = by[(i + 1) % by.size()];
    const double ex = q.x - p.x, ey = q.y - p.y;
    const double elen = std::hypot(ex, ey);
    auto side = [&](Point v) { return orient * (ex * (v.y - p.y) - ey * (v.x - p.x)) / elen; };
    std::vector<Point> out;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Point u = poly[k], v = poly[(k + 1) % poly.size()];
      const double su = side(u), sv = side(v);
      const bool in_u = su >= -1e-9, in_v = sv >= -1e-9;
      if (in_u) out.push_back(u);
      if (in_u != in_v) {
        const double t = su / (su - sv);
        out.push_back({u.x + t * (v.x - u.x), u.y + t * (v.y - u.y)});
      }
    }
    poly = std::move(out);
  }
  return poly;
}

}  // namespace

int insulators_between(const Wire& a, const Wire& b, std::vector<Point>* where) {
  const double la = std::hypot(a.b.x - a.a.x, a.b.y - a.a.y);
  const double lb = std::hypot(b.b.x - b.a.x, b.b.y - b.a.y);
  if (la < 1e-12 || lb < 1e-12) return 0;
  const auto piece = clip(strip(a), strip(b));
  if (piece.empty()) return 0;
  // The overlap is measured along whichever wire it stretches furthest on:
  // a sharp crossing or a side-by-side run covers more than one width.
  double best = -1, lo = 0, hi = 0;
  Point dir{};
  for (const Wire* s : {&a, &b}) {
    const double len = s == &a ? la : lb;
    const Point d{(s->b.x - s->a.x) / len, (s->b.y - s->a.y) / len};
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (Point p : piece) {
      const double t = p.x * d.x + p.y * d.y;
      mn = std::min(mn, t);
      mx = std::max(mx, t);
    }
    if (mx - mn > best) best = mx - mn, lo = mn, hi = mx, dir = d;
  }
  const int n = std::max(1, static_cast<int>(std::ceil(best / kWireWidth - 1e-9)));
  if (where) {
    Point c{};
    for (Point p : piece) c.x += p.x, c.y += p.y;
    c.x /= piece.size(), c.y /= piece.size();
    const double tc = c.x * dir.x + c.y * dir.y;
    for (int k = 0; k < n; ++k) {
      const double t = lo + (hi - lo) * (k + 0.5) / n - tc;
      where->push_back({quantize(c.x + t * dir.x), quantize(c.y + t * dir.y)});
    }
  }
  return n;
}

RoutingSolution direct_connect(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m, Metric metric) {
  RoutingSolution sol;
  std::vector<std::vector<Wire>> per_net(c.net_count());
  std::vector<Point> pts;
  for (const auto& net : c.nets()) {
    pts.clear();
    for (int pin : net.members) {
      auto q = pin_location(c, layout, m, pin);
      if (q) pts.push_back(*q);
    }
    if (pts.size() < 2) continue;
    auto tree = prim_tree(pts, metric, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (tree.parent[i] < 0) continue;
      Point a = pts[tree.parent[i]], b = pts[i];
      if (metric == Metric::euclidean) {
        per_net[net.id].push_back({a, b, net.id, false});
      } else {
        Point corner = a.y <= b.y ? Point{b.x, a.y} : Point{a.x, b.y};
        if (corner != a) per_net[net.id].push_back({a, corner, net.id, false});
        if (corner != b) per_net[net.id].push_back({corner, b, net.id, false});
      }
    }
  }
  // Bucket segments by cells so only nearby pairs are tested.
  struct Seg {
    const Wire* w;
    int cx0, cy0, cx1, cy1;
  };
  const double cell = std::max(layout.rho, 1.0);
  std::vector<Seg> segs;
  for (const auto& ws : per_net) {
    for (const auto& w : ws) {
      const double h = kWireWidth / 2;
      segs.push_back({&w, static_cast<int>(std::floor((std::min(w.a.x, w.b.x) - h) / cell)),
                      static_cast<int>(std::floor((std::min(w.a.y, w.b.y) - h) / cell)),
                      static_cast<int>(std::floor((std::max(w.a.x, w.b.x) + h) / cell)),
                      static_cast<int>(std::floor((std::max(w.a.y, w.b.y) + h) / cell))});
    }
  }
  std::map<std::pair<int, int>, std::vector<int>> buckets;
  for (int i = 0; i < static_cast<int>(segs.size()); ++i)
    for (int y = segs[i].cy0; y <= segs[i].cy1; ++y)
      for (int x = segs[i].cx0; x <= segs[i].cx1; ++x) buckets[{x, y}].push_back(i);
  // Insulators are printed with the later net.
  std::vector<std::vector<Point>> ins(c.net_count());
  for (const auto& [key, list] : buckets) {
    for (std::size_t p = 0; p < list.size(); ++p) {
      for (std::size_t q = p + 1; q < list.size(); ++q) {
        const Seg& a = segs[list[p]];
        const Seg& b = segs[list[q]];
        if (a.w->net == b.w->net) continue;
        // test each pair once, in the first cell both cover
        if (key != std::pair{std::max(a.cx0, b.cx0), std::max(a.cy0, b.cy0)}) continue;
        if (a.cx1 < b.cx0 || b.cx1 < a.cx0 || a.cy1 < b.cy0 || b.cy1 < a.cy0) continue;
        const int later = std::max(a.w->net, b.w->net);
        insulators_between(*a.w, *b.w, &ins[later]);
      }
    }
  }
  for (int net = 0; net < c.net_count(); ++net) {
    auto& pts_i = ins[net];
    std::sort(pts_i.begin(), pts_i.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    for (Point p : pts_i) sol.sequence.emplace_back(Insulator{p});
    for (const auto& w : per_net[net]) sol.sequence.emplace_back(w);
  }
  return sol;
}

}  // namespace nepr
