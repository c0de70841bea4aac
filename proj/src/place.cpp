#include "nepr/place.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace nepr {

SASchedule SASchedule::make(double t0, long iterations, double d_max, double d_min, double epsilon_ratio) {
  SASchedule s;
  s.t0 = t0;
  s.epsilon = epsilon_ratio * t0;
  s.iterations = iterations;
  s.k_t = iterations > 0 ? std::pow(epsilon_ratio, 1.0 / static_cast<double>(iterations)) : 1.0;
  s.d_max = std::max(d_max, d_min);
  s.d_min = d_min;
  return s;
}

double SASchedule::neighbor_distance(double temperature) const {
  const double span = std::log(t0) - std::log(epsilon);
  if (!(span > 0)) return d_min;
  double f = (std::log(temperature) - std::log(epsilon)) / span;
  f = std::clamp(f, 0.0, 1.0);
  return d_min + (d_max - d_min) * f;
}

// ---------------------------------------------------------------------------

std::vector<VirtualPin> compute_virtual_pins(const LogicalCircuit& c, const PartitionResult& p, const Floorplan& fp,
                                             const std::vector<int>& io_owner) {
  std::vector<VirtualPin> out;
  std::vector<int> blocks;
  for (const auto& net : c.nets()) {
    if (net.is_large) continue;
    blocks.clear();
    for (int pin : net.members) {
      int b = -1;
      if (!c.is_io_pin(pin)) b = p.block_of[c.component_of_pin(pin)];
      else if (!io_owner.empty()) b = io_owner[c.io_of_pin(pin)];
      if (b >= 0) blocks.push_back(b);
    }
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
    if (blocks.size() < 2) continue;
    std::vector<Point> centres;
    for (int b : blocks) centres.push_back(fp.rects[b].center());
    if (blocks.size() == 2) {
      out.push_back({net.id, blocks[0], centres[1]});
      out.push_back({net.id, blocks[1], centres[0]});
      continue;
    }
    auto tree = prim_tree(centres, Metric::euclidean, 0);
    int nearest_child = -1;
    for (int i = 1; i < static_cast<int>(blocks.size()); ++i) {
      if (tree.parent[i] != 0) continue;
      if (nearest_child < 0 || euclidean(centres[i], centres[0]) < euclidean(centres[nearest_child], centres[0])) nearest_child = i;
    }
    for (int i = 0; i < static_cast<int>(blocks.size()); ++i) {
      int j = i == 0 ? nearest_child : tree.parent[i];
      out.push_back({net.id, blocks[i], centres[j]});
    }
  }
  return out;
}

double placement_cost(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m, const std::vector<VirtualPin>& vpins) {
  std::vector<std::vector<Point>> extra(c.net_count());
  for (const auto& v : vpins) extra[v.net].push_back(v.position);
  double total = 0;
  std::vector<Point> pts;
  for (const auto& net : c.nets()) {
    if (net.is_large) continue;
    pts.clear();
    for (int pin : net.members) {
      auto q = pin_location(c, layout, m, pin);
      if (q) pts.push_back(*q);
    }
    pts.insert(pts.end(), extra[net.id].begin(), extra[net.id].end());
    if (pts.size() >= 2) total += mst_length(pts, Metric::manhattan);
  }
  return total;
}

// ---------------------------------------------------------------------------

BlockPlacer::BlockPlacer(const LogicalCircuit& c, const PhysicalLayout& layout, BlockProblem problem)
    : c_(c), layout_(layout), prob_(std::move(problem)) {
  const int nc = static_cast<int>(prob_.comps.size());
  const int ni = static_cast<int>(prob_.ios.size());
  const int np = static_cast<int>(prob_.phys.size());
  const int ns = static_cast<int>(prob_.slots.size());

  for (int k = 0; k < np; ++k) {
    const auto& pc = layout.components[prob_.phys[k]];
    phys_pins_.push_back(pin_positions(pc));
    phys_kind_.push_back(pc.kind);
    by_kind_[pc.kind == Kind::nmos].push_back(k);
  }
  for (int s = 0; s < ns; ++s) slot_pos_.push_back(layout.io_slots[prob_.slots[s]]);
  for (int lc = 0; lc < nc; ++lc) comp_kind_.push_back(c.components()[prob_.comps[lc]].kind);

  // Local nets of this block.
  std::map<int, int> local_net;
  std::vector<std::vector<LocalPin>> pins;
  auto add_pin = [&](int net, LocalPin lp) {
    if (c.nets()[net].is_large) return;
    auto [it, fresh] = local_net.emplace(net, static_cast<int>(pins.size()));
    if (fresh) pins.emplace_back();
    pins[it->second].push_back(lp);
  };
  for (int lc = 0; lc < nc; ++lc)
    for (int k = 0; k < 3; ++k) add_pin(c.nets_of_component(prob_.comps[lc])[k], {false, lc, k});
  for (int li = 0; li < ni; ++li) add_pin(c.net_of_pin(c.io_pin(prob_.ios[li])), {true, li, 0});

  std::vector<int> remap(pins.size(), -1);
  for (auto [net, idx] : local_net) {
    LocalNet ln;
    ln.pins = std::move(pins[idx]);
    auto v = prob_.vpins.find(net);
    if (v != prob_.vpins.end()) {
      ln.has_vpin = true;
      ln.vpin = v->second;
    }
    if (ln.pins.size() + ln.has_vpin < 2) continue;
    remap[idx] = static_cast<int>(nets_.size());
    nets_.push_back(std::move(ln));
  }
  comp_nets_.assign(nc, {-1, -1, -1});
  io_net_.assign(ni, -1);
  for (auto [net, idx] : local_net) {
    if (remap[idx] < 0) continue;
    for (const auto& lp : nets_[remap[idx]].pins) {
      if (lp.io) io_net_[lp.index] = remap[idx];
      else comp_nets_[lp.index][lp.slot] = remap[idx];
    }
  }
  net_cost_.assign(nets_.size(), 0.0);

  // Bucket grid for range queries.
  cell_ = std::max(layout.rho, 1e-3);
  double x1 = 0, y1 = 0;
  gx0_ = gy0_ = std::numeric_limits<double>::infinity();
  for (int k = 0; k < np; ++k) {
    Point q = phys_pins_[k][0];
    gx0_ = std::min(gx0_, q.x);
    gy0_ = std::min(gy0_, q.y);
    x1 = std::max(x1, q.x);
    y1 = std::max(y1, q.y);
  }
  if (np == 0) gx0_ = gy0_ = 0;
  gw_ = std::max(1, static_cast<int>((x1 - gx0_) / cell_) + 1);
  gh_ = std::max(1, static_cast<int>((y1 - gy0_) / cell_) + 1);
  for (auto& g : grid_) g.assign(static_cast<std::size_t>(gw_) * gh_, {});
  for (int k = 0; k < np; ++k) {
    Point q = phys_pins_[k][0];
    int cx = std::min(gw_ - 1, static_cast<int>((q.x - gx0_) / cell_));
    int cy = std::min(gh_ - 1, static_cast<int>((q.y - gy0_) / cell_));
    grid_[phys_kind_[k] == Kind::nmos][static_cast<std::size_t>(cy) * gw_ + cx].push_back(k);
  }
  // Nearest same-type neighbour by expanding rings.
  nearest_.assign(np, -1);
  for (int k = 0; k < np; ++k) {
    const int kind = phys_kind_[k] == Kind::nmos;
    if (by_kind_[kind].size() < 2) continue;
    Point q = phys_pins_[k][0];
    int cx = std::min(gw_ - 1, static_cast<int>((q.x - gx0_) / cell_));
    int cy = std::min(gh_ - 1, static_cast<int>((q.y - gy0_) / cell_));
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= std::max(gw_, gh_); ++r) {
      // Anything found within ring r is closer than (r) cells; stop one ring later.
      if (nearest_[k] >= 0 && (r - 1) * cell_ > best) break;
      for (int y = cy - r; y <= cy + r; ++y) {
        for (int x = cx - r; x <= cx + r; ++x) {
          if (std::max(std::abs(x - cx), std::abs(y - cy)) != r) continue;
          if (x < 0 || y < 0 || x >= gw_ || y >= gh_) continue;
          for (int o : grid_[kind][static_cast<std::size_t>(y) * gw_ + x]) {
            if (o == k) continue;
            double d = euclidean(q, phys_pins_[o][0]);
            if (d < best || (d == best && o < nearest_[k])) {
              best = d;
              nearest_[k] = o;
            }
          }
        }
      }
    }
  }
  comp_at_.assign(nc, -1);
  io_at_.assign(ni, -1);
  phys_owner_.assign(np, -1);
  slot_owner_.assign(ns, -1);
}

void BlockPlacer::randomize(Rng& rng) {
  std::fill(phys_owner_.begin(), phys_owner_.end(), -1);
  std::fill(slot_owner_.begin(), slot_owner_.end(), -1);
  for (int kind = 0; kind < 2; ++kind) {
    std::vector<int> pool = by_kind_[kind];
    rng.shuffle(pool);
    std::size_t next = 0;
    for (int lc = 0; lc < static_cast<int>(comp_kind_.size()); ++lc) {
      if ((comp_kind_[lc] == Kind::nmos) != (kind == 1)) continue;
      if (next >= pool.size())
        throw SemanticError("block " + std::to_string(prob_.block) + " has too few " + std::string(kind ? "nmos" : "pmos") +
                            " components");
      comp_at_[lc] = pool[next++];
      phys_owner_[comp_at_[lc]] = lc;
    }
  }
  std::vector<int> slots(slot_pos_.size());
  for (int s = 0; s < static_cast<int>(slots.size()); ++s) slots[s] = s;
  rng.shuffle(slots);
  if (io_at_.size() > slots.size()) throw SemanticError("block " + std::to_string(prob_.block) + " has too few io slots");
  for (int li = 0; li < static_cast<int>(io_at_.size()); ++li) {
    io_at_[li] = slots[li];
    slot_owner_[slots[li]] = li;
  }
  for (int e = 0; e < static_cast<int>(nets_.size()); ++e) net_cost_[e] = net_cost(e);
  cost_ = full_cost();
}

double BlockPlacer::net_cost(int e) const {
  const LocalNet& n = nets_[e];
  Point buf[64];
  int k = 0;
  for (const auto& lp : n.pins) {
    if (lp.io) {
      buf[k++] = slot_pos_[io_at_[lp.index]];
    } else {
      buf[k++] = phys_pins_[comp_at_[lp.index]][lp.slot];
    }
  }
  if (n.has_vpin) buf[k++] = n.vpin;
  return mst_length(std::span<const Point>(buf, k), Metric::manhattan);
}

double BlockPlacer::full_cost() const {
  double total = 0;
  for (int e = 0; e < static_cast<int>(nets_.size()); ++e) total += net_cost(e);
  return total;
}

std::vector<int> BlockPlacer::neighbors_within(int j, double d) const {
  std::vector<int> out;
  const int kind = phys_kind_[j] == Kind::nmos;
  Point q = phys_pins_[j][0];
  int x0 = std::max(0, static_cast<int>(std::floor((q.x - d - gx0_) / cell_)));
  int x1 = std::min(gw_ - 1, static_cast<int>(std::floor((q.x + d - gx0_) / cell_)));
  int y0 = std::max(0, static_cast<int>(std::floor((q.y - d - gy0_) / cell_)));
  int y1 = std::min(gh_ - 1, static_cast<int>(std::floor((q.y + d - gy0_) / cell_)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      for (int o : grid_[kind][static_cast<std::size_t>(y) * gw_ + x]) {
        if (o != j && euclidean(q, phys_pins_[o][0]) <= d) out.push_back(o);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int BlockPlacer::pick_component(int j, double d_n, Rng& rng) const {
  const auto& pool = by_kind_[phys_kind_[j] == Kind::nmos];
  if (pool.size() < 2) return j;
  const double area = std::max(static_cast<double>(gw_) * gh_ * cell_ * cell_, 1e-9);
  const double expected = kPi * d_n * d_n * pool.size() / area;
  Point q = phys_pins_[j][0];
  if (expected * 32 >= static_cast<double>(pool.size())) {
    // Rejection sampling is uniform over the in-range set.
    for (int tries = 0; tries < 64; ++tries) {
      int y = pool[rng.below(static_cast<int>(pool.size()))];
      if (y != j && euclidean(q, phys_pins_[y][0]) <= d_n) return y;
    }
  }
  auto cand = neighbors_within(j, d_n);
  if (cand.empty()) return nearest_[j];
  return cand[rng.below(static_cast<int>(cand.size()))];
}

int BlockPlacer::pick_slot(int cur, double d_n, Rng& rng) const {
  std::vector<int> cand;
  int nearest = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < static_cast<int>(slot_pos_.size()); ++s) {
    if (s == cur) continue;
    double d = euclidean(slot_pos_[cur], slot_pos_[s]);
    if (d <= d_n) cand.push_back(s);
    if (d < best) {
      best = d;
      nearest = s;
    }
  }
  if (cand.empty()) return nearest < 0 ? cur : nearest;
  return cand[rng.below(static_cast<int>(cand.size()))];
}

Move BlockPlacer::propose(Rng& rng, double d_n) const {
  Move m;
  const int total = mapping_count();
  int pick = rng.below(total);
  if (pick < static_cast<int>(comp_at_.size())) {
    m.a = pick;
    m.target = pick_component(comp_at_[pick], d_n, rng);
    m.b = m.target == comp_at_[pick] ? -1 : phys_owner_[m.target];
  } else {
    m.io = true;
    m.a = pick - static_cast<int>(comp_at_.size());
    m.target = pick_slot(io_at_[m.a], d_n, rng);
    m.b = m.target == io_at_[m.a] ? -1 : slot_owner_[m.target];
  }
  return m;
}

int BlockPlacer::affected_nets(const Move& m, int* out) const {
  int k = 0;
  auto add = [&](int e) {
    if (e < 0) return;
    for (int i = 0; i < k; ++i)
      if (out[i] == e) return;
    out[k++] = e;
  };
  if (m.io) {
    add(io_net_[m.a]);
    if (m.b >= 0) add(io_net_[m.b]);
  } else {
    for (int e : comp_nets_[m.a]) add(e);
    if (m.b >= 0)
      for (int e : comp_nets_[m.b]) add(e);
  }
  return k;
}

void BlockPlacer::swap_state(const Move& m) {
  auto& at = m.io ? io_at_ : comp_at_;
  const int old = at[m.a];
  at[m.a] = m.target;
  if (m.b >= 0) at[m.b] = old;
}

double BlockPlacer::delta(const Move& m) {
  auto& at = m.io ? io_at_ : comp_at_;
  if (at[m.a] == m.target) return 0.0;
  int nets[6];
  const int k = affected_nets(m, nets);
  const int old_a = at[m.a];
  double before = 0, after = 0;
  for (int i = 0; i < k; ++i) before += net_cost_[nets[i]];
  swap_state(m);
  for (int i = 0; i < k; ++i) after += net_cost(nets[i]);
  // undo
  if (m.b >= 0) at[m.b] = m.target;
  at[m.a] = old_a;
  return after - before;
}

void BlockPlacer::apply(const Move& m) {
  auto& at = m.io ? io_at_ : comp_at_;
  auto& owner = m.io ? slot_owner_ : phys_owner_;
  const int old = at[m.a];
  if (old == m.target) return;
  int nets[6];
  const int k = affected_nets(m, nets);
  swap_state(m);
  owner[m.target] = m.a;
  owner[old] = m.b;
  for (int i = 0; i < k; ++i) {
    double c = net_cost(nets[i]);
    cost_ += c - net_cost_[nets[i]];
    net_cost_[nets[i]] = c;
  }
}

void BlockPlacer::write_to(Placement& out) const {
  for (int lc = 0; lc < static_cast<int>(comp_at_.size()); ++lc) out.comp_map[prob_.comps[lc]] = prob_.phys[comp_at_[lc]];
  for (int li = 0; li < static_cast<int>(io_at_.size()); ++li) out.io_map[prob_.ios[li]] = prob_.slots[io_at_[li]];
}

// ---------------------------------------------------------------------------

PlaceStats place_sa(BlockPlacer& placer, const PlaceOptions& opt, Rng rng) {
  PlaceStats st;
  placer.randomize(rng);
  st.initial_cost = placer.cost();
  if (placer.mapping_count() == 0) return st;
  const double n = static_cast<double>(placer.problem().comps.size());
  const long iters = opt.iterations >= 0 ? opt.iterations : std::max(1L, std::lround(opt.iters_scale * n * n));
  const double d_max = placer.problem().d_max;

  double sum = 0;
  for (int i = 0; i < 100; ++i) sum += std::abs(placer.delta(placer.propose(rng, d_max)));
  double t0 = 20.0 * sum / 100.0;
  if (!(t0 > 0)) t0 = 1.0;
  const SASchedule sched = SASchedule::make(t0, iters, d_max, placer.rho(), opt.epsilon_ratio);
  st.t0 = t0;
  st.iterations = iters;

  double temp = sched.t0;
  for (long it = 0; it < iters; ++it, temp *= sched.k_t) {
    Move m = placer.propose(rng, sched.neighbor_distance(temp));
    double d = placer.delta(m);
    if (d < 0 || rng.uniform() < std::exp(-d / temp)) {
      placer.apply(m);
      ++st.accepted;
    }
    if (opt.audit_every > 0 && (it + 1) % opt.audit_every == 0) {
      double full = placer.full_cost();
      st.max_audit_error = std::max(st.max_audit_error, std::abs(full - placer.cost()) / std::max(1.0, full));
    }
  }
  st.final_cost = placer.cost();
  return st;
}

// ---------------------------------------------------------------------------

Floorplan whole_substrate(const PhysicalLayout& layout) {
  Floorplan fp;
  fp.width = layout.width;
  fp.height = layout.height;
  fp.rects = {layout.substrate()};
  fp.tree.nodes.push_back({-1, -1, 0, true});
  fp.tree.root = 0;
  return fp;
}

std::vector<int> assign_io_owners(const LogicalCircuit& c, const PartitionResult& p, const Floorplan& fp,
                                  const PhysicalLayout& layout) {
  const int B = static_cast<int>(fp.rects.size());
  std::vector<int> capacity(B, 0);
  for (Point s : layout.io_slots) ++capacity[block_at(fp, s)];
  std::vector<int> owner(c.io_count(), -1);
  for (int io = 0; io < c.io_count(); ++io) {
    const auto& net = c.nets()[c.net_of_pin(c.io_pin(io))];
    std::vector<int> votes(B, 0);
    for (int pin : net.members)
      if (!c.is_io_pin(pin)) ++votes[p.block_of[c.component_of_pin(pin)]];
    int best = -1;
    for (int b = 0; b < B; ++b) {
      if (capacity[b] == 0) continue;
      if (best < 0 || votes[b] > votes[best]) best = b;
    }
    if (best < 0) throw SemanticError("no block has a free io slot for io." + c.io_pins()[io]);
    if (votes[best] == 0) {
      // No block with capacity holds the net; take the one nearest the net's favourite.
      int fav = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
      Point q = fp.rects[fav].center();
      for (int b = 0; b < B; ++b) {
        if (capacity[b] > 0 && euclidean(fp.rects[b].center(), q) < euclidean(fp.rects[best].center(), q)) best = b;
      }
    }
    owner[io] = best;
    --capacity[best];
  }
  return owner;
}

std::vector<BlockProblem> make_block_problems(const LogicalCircuit& c, const PhysicalLayout& layout, const PartitionResult& p,
                                              const Floorplan& fp, bool virtual_pins) {
  const int B = static_cast<int>(fp.rects.size());
  std::vector<BlockProblem> out(B);
  auto phys = components_by_block(fp, layout);
  auto owners = assign_io_owners(c, p, fp, layout);
  for (int b = 0; b < B; ++b) {
    out[b].block = b;
    out[b].phys = phys[b];
    out[b].d_max = fp.rects[b].diagonal();
  }
  for (int i = 0; i < c.component_count(); ++i) out[p.block_of[i]].comps.push_back(i);
  for (int io = 0; io < c.io_count(); ++io) out[owners[io]].ios.push_back(io);
  for (int s = 0; s < static_cast<int>(layout.io_slots.size()); ++s) out[block_at(fp, layout.io_slots[s])].slots.push_back(s);
  if (virtual_pins && B > 1) {
    for (const auto& v : compute_virtual_pins(c, p, fp, owners)) out[v.block].vpins[v.net] = v.position;
  }
  return out;
}

Placement place_blocks(const LogicalCircuit& c, const PhysicalLayout& layout, const std::vector<BlockProblem>& blocks,
                       const PlaceOptions& opt, std::uint64_t seed, int jobs, std::vector<PlaceStats>* stats) {
  const int n = static_cast<int>(blocks.size());
  std::vector<Placement> parts(n, Placement::empty_for(c));
  std::vector<PlaceStats> st(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k; (k = next.fetch_add(1)) < n;) {
      try {
        BlockPlacer placer(c, layout, blocks[k]);
        st[k] = place_sa(placer, opt, make_stream(seed, static_cast<std::uint64_t>(blocks[k].block)));
        placer.write_to(parts[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(1, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  Placement merged = Placement::empty_for(c);
  for (const auto& part : parts) {
    for (int i = 0; i < c.component_count(); ++i)
      if (part.comp_map[i] != kUnmapped) merged.comp_map[i] = part.comp_map[i];
    for (int i = 0; i < c.io_count(); ++i)
      if (part.io_map[i] != kUnmapped) merged.io_map[i] = part.io_map[i];
  }
  if (stats) *stats = std::move(st);
  return merged;
}

}  // namespace nepr
