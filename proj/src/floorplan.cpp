#include "nepr/floorplan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "nepr/rng.hpp"
#include "text.hpp"

namespace nepr {

std::string SlicingTree::polish() const {
  std::string out;
  std::function<void(int)> rec = [&](int n) {
    if (is_leaf(n)) {
      out += std::to_string(nodes[n].block) + " ";
      return;
    }
    rec(nodes[n].left);
    rec(nodes[n].right);
    out += nodes[n].vertical ? "V " : "H ";
  };
  if (root >= 0) rec(root);
  if (!out.empty()) out.pop_back();
  return out;
}

SlicingTree SlicingTree::from_polish(std::string_view expr) {
  SlicingTree t;
  std::vector<int> stack;
  std::size_t pos = 0;
  while (pos < expr.size()) {
    while (pos < expr.size() && expr[pos] == ' ') ++pos;
    std::size_t end = expr.find(' ', pos);
    if (end == std::string_view::npos) end = expr.size();
    std::string_view tok = expr.substr(pos, end - pos);
    pos = end;
    if (tok.empty()) continue;
    if (tok == "V" || tok == "H") {
      if (stack.size() < 2) throw SemanticError("malformed slicing expression");
      Node n;
      n.right = stack.back();
      stack.pop_back();
      n.left = stack.back();
      stack.pop_back();
      n.vertical = tok == "V";
      t.nodes.push_back(n);
    } else {
      Node n;
      if (tok.find_first_not_of("0123456789") != std::string_view::npos || tok.size() > 6)
        throw SemanticError("bad slicing token '" + std::string(tok) + "'");
      n.block = std::stoi(std::string(tok));
      t.nodes.push_back(n);
    }
    stack.push_back(static_cast<int>(t.nodes.size()) - 1);
  }
  if (stack.size() != 1) throw SemanticError("malformed slicing expression");
  t.root = stack.back();
  return t;
}

// ---------------------------------------------------------------------------

std::vector<Rect> evaluate_tree(const SlicingTree& tree, const std::vector<double>& weight, Rect region) {
  std::vector<Rect> rects(weight.size());
  std::vector<double> sub(tree.nodes.size(), 0.0);
  std::function<double(int)> total = [&](int n) {
    const auto& node = tree.nodes[n];
    sub[n] = node.block >= 0 ? weight[node.block] : total(node.left) + total(node.right);
    return sub[n];
  };
  std::function<void(int, double, double, double, double)> place = [&](int n, double x0, double y0, double x1, double y1) {
    const auto& node = tree.nodes[n];
    if (node.block >= 0) {
      rects[node.block] = {x0, y0, quantize(x1 - x0), quantize(y1 - y0)};
      return;
    }
    const double frac = sub[n] > 0 ? sub[node.left] / sub[n] : 0.5;
    if (node.vertical) {
      double xm = quantize(x0 + (x1 - x0) * frac);
      place(node.left, x0, y0, xm, y1);
      place(node.right, xm, y0, x1, y1);
    } else {
      double ym = quantize(y0 + (y1 - y0) * frac);
      place(node.left, x0, y0, x1, ym);
      place(node.right, x0, ym, x1, y1);
    }
  };
  if (tree.root >= 0) {
    total(tree.root);
    place(tree.root, region.x, region.y, region.x + region.w, region.y + region.h);
  }
  return rects;
}

int block_at(const Floorplan& fp, Point p) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int b = 0; b < static_cast<int>(fp.rects.size()); ++b) {
    const Rect& r = fp.rects[b];
    if (r.contains(p)) return b;
    double dx = std::max({r.x - p.x, 0.0, p.x - (r.x + r.w)});
    double dy = std::max({r.y - p.y, 0.0, p.y - (r.y + r.h)});
    double d = std::hypot(dx, dy);
    if (d < best_d) {
      best_d = d;
      best = b;
    }
  }
  return best;
}

std::vector<std::vector<int>> components_by_block(const Floorplan& fp, const PhysicalLayout& layout) {
  std::vector<std::vector<int>> out(fp.rects.size());
  for (const auto& comp : layout.components) out[block_at(fp, comp.center)].push_back(comp.id);
  return out;
}

namespace {

/// Block sets of inter-block nets with their multiplicity.
std::map<std::vector<int>, int> block_sets(const LogicalCircuit& c, const PartitionResult& p) {
  std::map<std::vector<int>, int> out;
  std::vector<int> blocks;
  for (const auto& net : c.nets()) {
    blocks.clear();
    for (int pin : net.members) {
      if (c.is_io_pin(pin)) continue;
      blocks.push_back(p.block_of[c.component_of_pin(pin)]);
    }
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
    if (blocks.size() >= 2) ++out[blocks];
  }
  return out;
}

double hpwl(const std::vector<int>& leaves, const std::vector<Rect>& rects) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (int b : leaves) {
    Point q = rects[b].center();
    x0 = std::min(x0, q.x);
    x1 = std::max(x1, q.x);
    y0 = std::min(y0, q.y);
    y1 = std::max(y1, q.y);
  }
  return (x1 - x0) + (y1 - y0);
}

int required(int need, double margin) { return need == 0 ? 0 : static_cast<int>(std::ceil((1.0 + margin) * need - 1e-9)); }

/// One slicing problem: leaves tiled inside `region`.
struct Problem {
  Rect region;
  std::vector<double> weight;
  std::vector<std::array<int, 2>> need;              // per leaf, pmos / nmos
  std::vector<std::pair<std::vector<int>, int>> nets;  // leaf sets
  std::array<std::vector<Point>, 2> comps;           // physical centres by type, sorted by x
  double margin = 0.1;

  int leaves() const { return static_cast<int>(weight.size()); }

  int count_in(const Rect& r, int kind) const {
    const auto& v = comps[kind];
    auto it = std::lower_bound(v.begin(), v.end(), r.x, [](const Point& a, double x) { return a.x < x; });
    int n = 0;
    for (; it != v.end() && it->x < r.x + r.w; ++it) n += it->y >= r.y && it->y < r.y + r.h;
    return n;
  }

  bool feasible(const std::vector<Rect>& rects) const {
    for (int l = 0; l < leaves(); ++l) {
      for (int k = 0; k < 2; ++k) {
        if (count_in(rects[l], k) < required(need[l][k], margin)) return false;
      }
    }
    return true;
  }

  double cost(const std::vector<Rect>& rects) const {
    double total = 0;
    for (const auto& [set, mult] : nets) total += mult * hpwl(set, rects);
    return total;
  }
};

SlicingTree build_tree(const Problem& pb, Rng& rng, bool aspect_aware) {
  std::vector<int> order(pb.leaves());
  for (int i = 0; i < pb.leaves(); ++i) order[i] = i;
  rng.shuffle(order);
  SlicingTree t;
  std::function<int(int, int, double, double)> rec = [&](int lo, int hi, double w, double h) -> int {
    if (hi - lo == 1) {
      t.nodes.push_back({-1, -1, order[lo], true});
      return static_cast<int>(t.nodes.size()) - 1;
    }
    double total = 0;
    for (int i = lo; i < hi; ++i) total += pb.weight[order[i]];
    int split = lo + 1;
    if (aspect_aware) {
      double acc = 0, best = std::numeric_limits<double>::infinity();
      for (int i = lo; i < hi - 1; ++i) {
        acc += pb.weight[order[i]];
        if (std::abs(acc - total / 2) < best) {
          best = std::abs(acc - total / 2);
          split = i + 1;
        }
      }
    } else {
      split = lo + 1 + rng.below(hi - lo - 1);
    }
    double left = 0;
    for (int i = lo; i < split; ++i) left += pb.weight[order[i]];
    const bool vertical = aspect_aware ? w >= h : rng.below(2) == 0;
    const double f = total > 0 ? left / total : 0.5;
    int l = vertical ? rec(lo, split, w * f, h) : rec(lo, split, w, h * f);
    int r = vertical ? rec(split, hi, w * (1 - f), h) : rec(split, hi, w, h * (1 - f));
    t.nodes.push_back({l, r, -1, vertical});
    return static_cast<int>(t.nodes.size()) - 1;
  };
  t.root = rec(0, pb.leaves(), pb.region.w, pb.region.h);
  return t;
}

/// Random neighbour: swap two leaves, flip a cut, or rotate at an internal node.
SlicingTree perturb(const SlicingTree& t, Rng& rng) {
  SlicingTree n = t;
  std::vector<int> leaves, internal;
  for (int i = 0; i < static_cast<int>(n.nodes.size()); ++i) (n.is_leaf(i) ? leaves : internal).push_back(i);
  std::vector<int> parent(n.nodes.size(), -1);
  for (int i : internal) {
    parent[n.nodes[i].left] = i;
    parent[n.nodes[i].right] = i;
  }
  std::vector<int> rotatable;
  for (int i : internal)
    if (parent[i] >= 0) rotatable.push_back(i);
  const int kinds = rotatable.empty() ? 2 : 3;
  switch (rng.below(kinds)) {
    case 0: {
      int a = leaves[rng.below(static_cast<int>(leaves.size()))];
      int b = leaves[rng.below(static_cast<int>(leaves.size()))];
      if (a == b) b = leaves[(std::find(leaves.begin(), leaves.end(), a) - leaves.begin() + 1) % leaves.size()];
      std::swap(n.nodes[a].block, n.nodes[b].block);
      break;
    }
    case 1: {
      int x = internal[rng.below(static_cast<int>(internal.size()))];
      n.nodes[x].vertical = !n.nodes[x].vertical;
      break;
    }
    default: {
      int x = rotatable[rng.below(static_cast<int>(rotatable.size()))];
      int p = parent[x];
      int g = parent[p];
      if (n.nodes[p].left == x) {
        n.nodes[p].left = n.nodes[x].right;
        n.nodes[x].right = p;
      } else {
        n.nodes[p].right = n.nodes[x].left;
        n.nodes[x].left = p;
      }
      if (g < 0) {
        n.root = x;
      } else if (n.nodes[g].left == p) {
        n.nodes[g].left = x;
      } else {
        n.nodes[g].right = x;
      }
      break;
    }
  }
  return n;
}

SlicingTree anneal(const Problem& pb, Rng rng, int attempts, std::vector<double>* trace) {
  const int L = pb.leaves();
  if (L == 1) {
    SlicingTree t;
    t.nodes.push_back({-1, -1, 0, true});
    t.root = 0;
    return t;
  }
  SlicingTree cur;
  std::vector<Rect> rects;
  bool found = false;
  for (int a = 0; a < attempts && !found; ++a) {
    cur = build_tree(pb, rng, a % 2 == 0);
    rects = evaluate_tree(cur, pb.weight, pb.region);
    found = pb.feasible(rects);
  }
  if (!found) throw FloorplanError("no feasible floorplan for " + std::to_string(L) + " blocks");
  double cur_cost = pb.cost(rects);
  if (trace) trace->push_back(cur_cost);

  double sum = 0;
  int samples = 0;
  for (int i = 0; i < 100; ++i) {
    auto cand = perturb(cur, rng);
    auto r = evaluate_tree(cand, pb.weight, pb.region);
    if (!pb.feasible(r)) continue;
    sum += std::abs(pb.cost(r) - cur_cost);
    ++samples;
  }
  double t0 = samples > 0 ? 20.0 * sum / samples : 0.0;
  if (!(t0 > 0)) t0 = 1.0;
  const int iters = L * L;
  const double k = std::pow(1e-3, 1.0 / iters);

  SlicingTree best = cur;
  double best_cost = cur_cost;
  double temp = t0;
  for (int it = 0; it < iters; ++it, temp *= k) {
    auto cand = perturb(cur, rng);
    auto r = evaluate_tree(cand, pb.weight, pb.region);
    if (!pb.feasible(r)) continue;
    const double c = pb.cost(r);
    if (c < cur_cost || rng.uniform() < std::exp((cur_cost - c) / temp)) {
      cur = std::move(cand);
      cur_cost = c;
      if (c < best_cost) {
        best = cur;
        best_cost = c;
      }
    }
    if (trace) trace->push_back(best_cost);
  }
  return best;
}

std::array<std::vector<Point>, 2> centres_in(const PhysicalLayout& layout, const Rect& region) {
  std::array<std::vector<Point>, 2> out;
  for (const auto& comp : layout.components) {
    if (layout.substrate() == region || region.contains(comp.center)) out[comp.kind == Kind::nmos].push_back(comp.center);
  }
  for (auto& v : out) std::sort(v.begin(), v.end(), [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return out;
}

}  // namespace

double estimate_interblock_wl(const LogicalCircuit& c, const PartitionResult& p, const Floorplan& fp) {
  double total = 0;
  for (const auto& [set, mult] : block_sets(c, p)) total += mult * hpwl(set, fp.rects);
  return total;
}

bool check_feasible(const Floorplan& fp, const PartitionResult& p, const LogicalCircuit& c, const PhysicalLayout& layout,
                    double margin) {
  std::vector<std::array<int, 2>> need(p.blocks, {0, 0}), have(p.blocks, {0, 0});
  for (const auto& comp : c.components()) ++need[p.block_of[comp.id]][comp.kind == Kind::nmos];
  for (const auto& comp : layout.components) ++have[block_at(fp, comp.center)][comp.kind == Kind::nmos];
  for (int b = 0; b < p.blocks; ++b) {
    for (int k = 0; k < 2; ++k)
      if (have[b][k] < required(need[b][k], margin)) return false;
  }
  return true;
}

Floorplan floorplan_sa(const LogicalCircuit& c, const PartitionResult& p, const PhysicalLayout& layout, std::uint64_t seed,
                       const FloorplanOptions& opt, FloorplanStats* stats) {
  const int B = p.blocks;
  auto trace = [&]() -> std::vector<double>* {
    if (!stats) return nullptr;
    stats->best_trace.emplace_back();
    return &stats->best_trace.back();
  };
  if (B < 1 || B > 256) throw FloorplanError("block count must be in [1, 256]");
  std::vector<double> weight(B, 0.0);
  std::vector<std::array<int, 2>> need(B, {0, 0});
  for (const auto& comp : c.components()) {
    weight[p.block_of[comp.id]] += 1.0;
    ++need[p.block_of[comp.id]][comp.kind == Kind::nmos];
  }
  const auto sets = block_sets(c, p);
  Floorplan fp;
  fp.width = layout.width;
  fp.height = layout.height;

  std::vector<std::string> modules;
  bool all_tagged = static_cast<int>(p.block_module.size()) == B;
  for (int b = 0; b < B && all_tagged; ++b) {
    if (p.block_module[b].empty()) all_tagged = false;
    else if (std::find(modules.begin(), modules.end(), p.block_module[b]) == modules.end()) modules.push_back(p.block_module[b]);
  }

  if (!all_tagged || modules.size() < 2) {
    Problem pb{layout.substrate(), weight, need, {}, centres_in(layout, layout.substrate()), opt.margin};
    pb.nets.assign(sets.begin(), sets.end());
    fp.tree = anneal(pb, make_stream(seed, 0xf100), opt.init_attempts, trace());
    fp.rects = evaluate_tree(fp.tree, weight, layout.substrate());
  } else {
    // Level one: modules as leaves.
    const int M = static_cast<int>(modules.size());
    std::vector<int> module_of(B);
    std::vector<std::vector<int>> blocks_of(M);
    for (int b = 0; b < B; ++b) {
      module_of[b] = static_cast<int>(std::find(modules.begin(), modules.end(), p.block_module[b]) - modules.begin());
      blocks_of[module_of[b]].push_back(b);
    }
    Problem top{layout.substrate(), std::vector<double>(M, 0.0), std::vector<std::array<int, 2>>(M, {0, 0}), {},
                centres_in(layout, layout.substrate()), opt.margin};
    for (int b = 0; b < B; ++b) {
      top.weight[module_of[b]] += weight[b];
      top.need[module_of[b]][0] += need[b][0];
      top.need[module_of[b]][1] += need[b][1];
    }
    std::map<std::vector<int>, int> msets;
    for (const auto& [set, mult] : sets) {
      std::vector<int> ms;
      for (int b : set) ms.push_back(module_of[b]);
      std::sort(ms.begin(), ms.end());
      ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
      if (ms.size() >= 2) msets[ms] += mult;
    }
    top.nets.assign(msets.begin(), msets.end());
    SlicingTree mtree = anneal(top, make_stream(seed, 0xf200), opt.init_attempts, trace());
    auto mrects = evaluate_tree(mtree, top.weight, layout.substrate());

    // Level two: blocks inside each module, then splice the subtrees in.
    std::vector<SlicingTree> subtrees(M);
    for (int m = 0; m < M; ++m) {
      const auto& bl = blocks_of[m];
      Problem pb{mrects[m], {}, {}, {}, centres_in(layout, mrects[m]), opt.margin};
      std::vector<int> local(B, -1);
      for (std::size_t i = 0; i < bl.size(); ++i) {
        local[bl[i]] = static_cast<int>(i);
        pb.weight.push_back(weight[bl[i]]);
        pb.need.push_back(need[bl[i]]);
      }
      std::map<std::vector<int>, int> lsets;
      for (const auto& [set, mult] : sets) {
        std::vector<int> ls;
        for (int b : set)
          if (local[b] >= 0) ls.push_back(local[b]);
        if (ls.size() >= 2) lsets[ls] += mult;
      }
      pb.nets.assign(lsets.begin(), lsets.end());
      subtrees[m] = anneal(pb, make_stream(seed, 0xf300 + m), opt.init_attempts, trace());
      for (auto& node : subtrees[m].nodes)
        if (node.block >= 0) node.block = bl[node.block];
    }
    SlicingTree full;
    std::function<int(int)> splice = [&](int n) -> int {
      const auto& node = mtree.nodes[n];
      if (node.block >= 0) {
        const auto& st = subtrees[node.block];
        const int offset = static_cast<int>(full.nodes.size());
        for (auto sn : st.nodes) {
          if (sn.block < 0) {
            sn.left += offset;
            sn.right += offset;
          }
          full.nodes.push_back(sn);
        }
        return st.root + offset;
      }
      int l = splice(node.left);
      int r = splice(node.right);
      full.nodes.push_back({l, r, -1, node.vertical});
      return static_cast<int>(full.nodes.size()) - 1;
    };
    full.root = splice(mtree.root);
    fp.tree = full;
    fp.rects = evaluate_tree(fp.tree, weight, layout.substrate());
  }
  if (!check_feasible(fp, p, c, layout, opt.margin)) throw FloorplanError("floorplan failed its final feasibility check");
  return fp;
}

// ---------------------------------------------------------------------------

std::string serialize_floorplan(const Floorplan& fp) {
  std::string out = "fpl 1\n";
  out += "substrate " + fmt3(fp.width) + " " + fmt3(fp.height) + "\n";
  out += "tree " + fp.tree.polish() + "\n";
  for (std::size_t b = 0; b < fp.rects.size(); ++b) {
    const Rect& r = fp.rects[b];
    out += "rect " + std::to_string(b) + " " + fmt3(r.x) + " " + fmt3(r.y) + " " + fmt3(r.w) + " " + fmt3(r.h) + "\n";
  }
  return out;
}

Floorplan parse_floorplan(std::string_view doc) {
  auto lines = text::tokenize(doc);
  text::expect_header(lines, "fpl", 1);
  Floorplan fp;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto& t = l.tokens;
    if (t[0] == "substrate" && t.size() == 3) {
      fp.width = text::to_double(l, t[1]);
      fp.height = text::to_double(l, t[2]);
    } else if (t[0] == "tree") {
      std::string expr;
      for (std::size_t k = 1; k < t.size(); ++k) expr += std::string(t[k]) + " ";
      try {
        fp.tree = SlicingTree::from_polish(expr);
      } catch (const std::exception& e) {
        text::fail(l, e.what());
      }
    } else if (t[0] == "rect" && t.size() == 6) {
      int b = text::to_int(l, t[1]);
      if (b != static_cast<int>(fp.rects.size())) text::fail(l, "rect ids must be dense and ordered");
      fp.rects.push_back({text::to_double(l, t[2]), text::to_double(l, t[3]), text::to_double(l, t[4]), text::to_double(l, t[5])});
    } else {
      text::fail(l, "unknown directive");
    }
  }
  if (fp.tree.root < 0) throw SemanticError("floorplan has no tree");
  std::vector<int> seen(fp.rects.size(), 0);
  for (const auto& n : fp.tree.nodes) {
    if (n.block < 0) continue;
    if (n.block >= static_cast<int>(fp.rects.size()) || seen[n.block]++) throw SemanticError("tree leaves do not match the rects");
  }
  if (std::count(seen.begin(), seen.end(), 1) != static_cast<long>(seen.size())) throw SemanticError("tree leaves do not match the rects");
  double area = 0;
  for (const auto& r : fp.rects) {
    if (!(r.w > 0 && r.h > 0)) throw SemanticError("empty floorplan rect");
    area += r.area();
  }
  if (std::abs(area - fp.width * fp.height) > 1e-6 * fp.width * fp.height) throw SemanticError("rects do not tile the substrate");
  return fp;
}

}  // namespace nepr
