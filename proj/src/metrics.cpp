#include "nepr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "nepr/artifacts.hpp"
#include "text.hpp"

namespace nepr {

double print_time(double psi, double alpha) {
  if (!(alpha > 0)) throw SemanticError("wire speed must be positive");
  return psi / alpha;
}

MetricsReport measure(double psi, int omega, double rho, double alpha, const RtLedger& rt, int failures) {
  MetricsReport r;
  r.psi = psi;
  r.psi_r = rho > 0 ? psi / rho : 0.0;
  r.omega = omega;
  r.rt_partition = rt.amortized();
  r.rt_per_instance = rt.per_instance();
  r.pt = print_time(psi, alpha);
  r.et = rt.total() + r.pt;
  r.failures = failures;
  return r;
}

MetricsReport measure(const RoutingSolution& s, const PhysicalLayout& layout, double alpha, const RtLedger& rt) {
  return measure(s.wire_length(), s.insulator_count(), layout.rho, alpha, rt, s.failed_nets());
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

}  // namespace

std::string serialize_metrics(const MetricsReport& r) {
  std::string out;
  if (r.source) out += "src=" + to_hex(r.source) + "\n";
  out += "psi=" + num(r.psi) + "\n";
  out += "psi_r=" + num(r.psi_r) + "\n";
  out += "omega=" + std::to_string(r.omega) + "\n";
  out += "rt_partition_s=" + num(r.rt_partition) + "\n";
  out += "rt_per_instance_s=" + num(r.rt_per_instance) + "\n";
  out += "pt_s=" + num(r.pt) + "\n";
  out += "et_s=" + num(r.et) + "\n";
  out += "failed_nets=" + std::to_string(r.failures) + "\n";
  return out;
}

MetricsReport parse_metrics(std::string_view doc) {
  MetricsReport r;
  for (const auto& line : text::tokenize(doc)) {
    for (auto tok : line.tokens) {
      auto eq = tok.find('=');
      if (eq == std::string_view::npos) text::fail(line, "expected key=value");
      auto key = tok.substr(0, eq);
      auto value = tok.substr(eq + 1);
      if (key == "src") r.source = std::strtoull(std::string(value).c_str(), nullptr, 16);
      else if (key == "psi") r.psi = text::to_double(line, value);
      else if (key == "psi_r") r.psi_r = text::to_double(line, value);
      else if (key == "omega") r.omega = text::to_int(line, value);
      else if (key == "rt_partition_s") r.rt_partition = text::to_double(line, value);
      else if (key == "rt_per_instance_s") r.rt_per_instance = text::to_double(line, value);
      else if (key == "pt_s") r.pt = text::to_double(line, value);
      else if (key == "et_s") r.et = text::to_double(line, value);
      else if (key == "failed_nets") r.failures = text::to_int(line, value);
      else text::fail(line, "unknown key '" + std::string(key) + "'");
    }
  }
  return r;
}

double mst_lower_bound(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m) {
  double sum = 0;
  std::vector<Point> pts;
  for (const auto& net : c.nets()) {
    pts.clear();
    for (int pin : net.members)
      if (auto q = pin_location(c, layout, m, pin)) pts.push_back(*q);
    sum += mst_length(pts, Metric::manhattan);
  }
  return sum;
}

int DrcReport::count(std::string_view kind) const {
  return static_cast<int>(std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

std::map<std::string, int> DrcReport::histogram() const {
  std::map<std::string, int> h;
  for (const auto& v : violations) ++h[v.kind];
  return h;
}

// ---------------------------------------------------------------------------

namespace {

struct Dsu {
  std::vector<int> up;
  int add() {
    up.push_back(static_cast<int>(up.size()));
    return up.back();
  }
  int find(int x) {
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  }
  void join(int a, int b) { up[find(a)] = find(b); }
};

std::string at(Point p) { return "(" + fmt3(p.x) + ", " + fmt3(p.y) + ")"; }

constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

class GridChecker {
 public:
  GridChecker(const RoutingSolution& s, const LogicalCircuit& c, const Placement& m, const PhysicalLayout& layout,
              const GridOptions& opt, DrcReport& out)
      : s_(s), c_(c), m_(m), layout_(layout), opt_(opt), out_(out), g_(s.grid) {}

  void run() {
    build_obstacles();
    for (const auto& f : s_.failures)
      if (f.net >= 0 && f.net < c_.net_count()) failed_.insert(f.net);
    scan_sequence();
    check_stubs();
    check_vertices();
    check_connectivity();
  }

 private:
  struct Use {
    int net;
    int mask;
    int first;  // sequence index of the first wire touching the vertex
  };

  void add(const std::string& kind, const std::string& detail) { out_.violations.push_back({kind, detail}); }

  bool lattice(double v, long long& k) const {
    const double q = v / g_;
    k = std::llround(q);
    return std::abs(q - static_cast<double>(k)) < 1e-6;
  }

  bool vertex_of(Point p, int& v) const {
    long long x, y;
    if (!lattice(p.x, x) || !lattice(p.y, y)) return false;
    if (x < 0 || y < 0 || x >= grid_.nx() || y >= grid_.ny()) return false;
    v = grid_.index(static_cast<int>(x), static_cast<int>(y));
    return true;
  }

  void build_obstacles() {
    grid_ = GridGraph(g_, layout_.width, layout_.height);
    std::vector<char> mapped(layout_.components.size(), 0);
    for (int p : m_.comp_map)
      if (p >= 0 && p < static_cast<int>(mapped.size())) mapped[p] = 1;
    for (const auto& pc : layout_.components)
      if (mapped[pc.id] || !opt_.route_over_unused) grid_.carve(routing_box(pc, g_));
  }

  void touch(int v, int net, int dir, int index) {
    auto& list = uses_[v];
    for (auto& u : list) {
      if (u.net == net) {
        u.mask |= 1 << dir;
        u.first = std::min(u.first, index);
        return;
      }
    }
    list.push_back({net, 1 << dir, index});
  }

  void scan_sequence() {
    for (int i = 0; i < static_cast<int>(s_.sequence.size()); ++i) {
      if (const auto* ins = std::get_if<Insulator>(&s_.sequence[i])) {
        int v;
        if (!vertex_of(ins->p, v)) {
          add("off-grid", "insulator at " + at(ins->p));
          continue;
        }
        insulators_[v].push_back(i);
        continue;
      }
      const Wire& w = std::get<Wire>(s_.sequence[i]);
      if (w.net < 0 || w.net >= c_.net_count()) {
        add("off-grid", "wire with unknown net " + std::to_string(w.net));
        continue;
      }
      int a, b;
      if (!vertex_of(w.a, a) || !vertex_of(w.b, b) || (w.a.x != w.b.x && w.a.y != w.b.y) || a == b) {
        add("off-grid", "wire " + at(w.a) + "-" + at(w.b));
        continue;
      }
      const int dx = grid_.ix(b) - grid_.ix(a), dy = grid_.iy(b) - grid_.iy(a);
      int dir = 0;
      while (!(kDx[dir] == (dx > 0) - (dx < 0) && kDy[dir] == (dy > 0) - (dy < 0))) ++dir;
      const int steps = std::abs(dx) + std::abs(dy);
      int v = a;
      for (int k = 0; k < steps; ++k) {
        const int u = grid_.neighbor(v, dir);
        const int e = grid_.edge_id(v, dir);
        if (grid_.edge(e) == GridGraph::kRemoved)
          add("box-intrusion", "net " + std::to_string(w.net) + " edge at " + at(grid_.point(v)));
        if (grid_.state(u) == VState::blocked || (k == 0 && grid_.state(v) == VState::blocked))
          add("box-intrusion", "net " + std::to_string(w.net) + " vertex " + at(grid_.point(u)));
        auto [it, fresh] = edge_net_.emplace(e, w.net);
        if (!fresh && it->second != w.net)
          add("edge-conflict", "nets " + std::to_string(it->second) + " and " + std::to_string(w.net) + " at " + at(grid_.point(v)));
        touch(v, w.net, dir, i);
        touch(u, w.net, (dir + 2) % 4, i);
        edges_of_[w.net].push_back({v, u});
        v = u;
      }
    }
  }

  void check_stubs() {
    std::set<int> seen;
    for (const auto& st : s_.stubs) {
      if (st.pin < 0 || st.pin >= c_.pin_count() || !seen.insert(st.pin).second) {
        add("bad-stub", "pin " + std::to_string(st.pin));
        continue;
      }
      auto phys = pin_location(c_, layout_, m_, st.pin);
      int v;
      if (!phys || !vertex_of(st.vertex, v) || euclidean(*phys, st.vertex) > 2.5 * g_ * std::sqrt(2.0) + 1e-6) {
        add("bad-stub", c_.pin_name(st.pin) + " at " + at(st.vertex));
        continue;
      }
      const int net = c_.net_of_pin(st.pin);
      auto [it, fresh] = stub_net_.emplace(v, net);
      if (!fresh && it->second != net) add("bad-stub", "two nets share the stub vertex " + at(st.vertex));
      if (grid_.state(v) == VState::blocked) add("box-intrusion", "stub " + c_.pin_name(st.pin) + " inside a box");
      stub_of_[st.pin] = v;
    }
  }

  void check_vertices() {
    for (const auto& [v, list] : uses_) {
      auto pin = stub_net_.find(v);
      for (const auto& u : list)
        if (pin != stub_net_.end() && pin->second != u.net)
          add("pin-intrusion", "net " + std::to_string(u.net) + " at a pin of net " + std::to_string(pin->second));
      auto ins = insulators_.find(v);
      const int n_ins = ins == insulators_.end() ? 0 : static_cast<int>(ins->second.size());
      if (list.size() < 2) {
        if (n_ins) add("stray-insulator", at(grid_.point(v)));
        continue;
      }
      if (list.size() > 2) {
        add("illegal-crossing", std::to_string(list.size()) + " nets at " + at(grid_.point(v)));
        continue;
      }
      const int a = list[0].mask, b = list[1].mask;
      const bool straight = (a == 0b0101 && b == 0b1010) || (a == 0b1010 && b == 0b0101);
      if (!straight) add("illegal-crossing", "nets " + std::to_string(list[0].net) + " and " + std::to_string(list[1].net) + " meet at " + at(grid_.point(v)));
      if (n_ins == 0) {
        add("missing-insulator", at(grid_.point(v)));
        continue;
      }
      if (n_ins > 1) add("stray-insulator", "duplicate at " + at(grid_.point(v)));
      const int later = std::max(list[0].first, list[1].first);
      if (ins->second.front() > later) add("print-order", "insulator after both wires at " + at(grid_.point(v)));
    }
    for (const auto& [v, idx] : insulators_)
      if (!uses_.count(v)) add("stray-insulator", "no wire at " + at(grid_.point(v)));
  }

  void check_connectivity() {
    for (const auto& net : c_.nets()) {
      if (failed_.count(net.id)) continue;
      std::unordered_map<int, int> id;
      Dsu dsu;
      auto node = [&](int v) {
        auto [it, fresh] = id.emplace(v, 0);
        if (fresh) it->second = dsu.add();
        return it->second;
      };
      auto e = edges_of_.find(net.id);
      if (e != edges_of_.end())
        for (auto [a, b] : e->second) dsu.join(node(a), node(b));
      std::set<int> roots;
      bool missing = false;
      for (int pin : net.members) {
        if (!pin_location(c_, layout_, m_, pin)) continue;
        auto st = stub_of_.find(pin);
        if (st == stub_of_.end()) {
          missing = true;
          continue;
        }
        roots.insert(dsu.find(node(st->second)));
      }
      if (missing || roots.size() > 1)
        add("disconnected-net", "net " + std::to_string(net.id) + (missing ? " has a pin without stub" : " in " + std::to_string(roots.size()) + " pieces"));
    }
  }

  const RoutingSolution& s_;
  const LogicalCircuit& c_;
  const Placement& m_;
  const PhysicalLayout& layout_;
  const GridOptions& opt_;
  DrcReport& out_;
  double g_;
  GridGraph grid_;
  std::set<int> failed_;
  std::unordered_map<int, int> edge_net_;
  std::unordered_map<int, std::vector<Use>> uses_;
  std::unordered_map<int, std::vector<int>> insulators_;
  std::unordered_map<int, int> stub_net_;
  std::unordered_map<int, int> stub_of_;
  std::unordered_map<int, std::vector<std::pair<int, int>>> edges_of_;
};

std::pair<long long, long long> key(Point p) { return {std::llround(p.x * 1000), std::llround(p.y * 1000)}; }

void check_free_form(const RoutingSolution& s, const LogicalCircuit& c, const Placement& m, const PhysicalLayout& layout,
                     DrcReport& out) {
  std::set<int> failed;
  for (const auto& f : s.failures) failed.insert(f.net);
  std::vector<std::pair<int, const Wire*>> wires;
  std::map<std::pair<long long, long long>, std::vector<int>> insulators;
  for (int i = 0; i < static_cast<int>(s.sequence.size()); ++i) {
    if (const auto* w = std::get_if<Wire>(&s.sequence[i])) {
      if (w->net < 0 || w->net >= c.net_count()) out.violations.push_back({"off-grid", "wire with unknown net"});
      else wires.push_back({i, w});
    } else {
      insulators[key(std::get<Insulator>(s.sequence[i]).p)].push_back(i);
    }
  }
  for (auto& [k, list] : insulators) std::reverse(list.begin(), list.end());  // pop_back takes the earliest
  // insulator coverage
  std::vector<Point> where;
  for (std::size_t i = 0; i < wires.size(); ++i) {
    const Wire& a = *wires[i].second;
    for (std::size_t j = i + 1; j < wires.size(); ++j) {
      const Wire& b = *wires[j].second;
      if (a.net == b.net) continue;
      const double reach = kWireWidth + 1e-9;
      if (std::max(a.a.x, a.b.x) < std::min(b.a.x, b.b.x) - reach || std::max(b.a.x, b.b.x) < std::min(a.a.x, a.b.x) - reach ||
          std::max(a.a.y, a.b.y) < std::min(b.a.y, b.b.y) - reach || std::max(b.a.y, b.b.y) < std::min(a.a.y, a.b.y) - reach)
        continue;
      where.clear();
      insulators_between(a, b, &where);
      for (Point p : where) {
        auto it = insulators.find(key(p));
        if (it == insulators.end() || it->second.empty()) {
          out.violations.push_back({"missing-insulator", at(p)});
          continue;
        }
        if (it->second.back() > std::max(wires[i].first, wires[j].first))
          out.violations.push_back({"print-order", "insulator after both wires at " + at(p)});
        it->second.pop_back();
      }
    }
  }
  for (const auto& [k, list] : insulators)
    for (std::size_t n = 0; n < list.size(); ++n) out.violations.push_back({"stray-insulator", at({k.first / 1000.0, k.second / 1000.0})});
  // connectivity through shared endpoints
  std::vector<std::vector<const Wire*>> per_net(c.net_count());
  for (auto [i, w] : wires) per_net[w->net].push_back(w);
  for (const auto& net : c.nets()) {
    if (failed.count(net.id)) continue;
    std::map<std::pair<long long, long long>, int> id;
    Dsu dsu;
    auto node = [&](Point p) {
      auto [it, fresh] = id.emplace(key(p), 0);
      if (fresh) it->second = dsu.add();
      return it->second;
    };
    for (const Wire* w : per_net[net.id]) dsu.join(node(w->a), node(w->b));
    std::set<int> roots;
    for (int pin : net.members)
      if (auto q = pin_location(c, layout, m, pin)) roots.insert(dsu.find(node(*q)));
    if (roots.size() > 1) out.violations.push_back({"disconnected-net", "net " + std::to_string(net.id)});
  }
}

}  // namespace

DrcReport drc_check(const RoutingSolution& s, const LogicalCircuit& c, const Placement& m, const PhysicalLayout& layout,
                    const GridOptions& opt) {
  DrcReport out;
  if (s.grid > 0) {
    GridChecker(s, c, m, layout, opt, out).run();
  } else {
    check_free_form(s, c, m, layout, out);
  }
  return out;
}

}  // namespace nepr
