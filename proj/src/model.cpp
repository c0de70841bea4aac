#include "nepr/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "text.hpp"

namespace nepr {

std::string_view to_string(Kind k) { return k == Kind::pmos ? "pmos" : "nmos"; }

std::optional<Kind> parse_kind(std::string_view s) {
  if (s == "pmos") return Kind::pmos;
  if (s == "nmos") return Kind::nmos;
  return std::nullopt;
}

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", quantize(v));
  return buf;
}

// ---------------------------------------------------------------------------

LogicalCircuit::LogicalCircuit(std::string name, std::vector<Kind> kinds, std::vector<std::string> modules,
                               std::vector<std::string> io_names, std::vector<std::vector<int>> net_members)
    : name_(std::move(name)), io_pins_(std::move(io_names)) {
  if (kinds.empty()) throw SemanticError("circuit has no components");
  if (!modules.empty() && modules.size() != kinds.size()) throw SemanticError("module tag count mismatch");
  const int n = static_cast<int>(kinds.size());
  components_.reserve(n);
  for (int i = 0; i < n; ++i) {
    components_.push_back({i, kinds[i], {3 * i, 3 * i + 1, 3 * i + 2}, modules.empty() ? std::string() : modules[i]});
  }
  std::set<std::string> seen;
  for (const auto& io : io_pins_) {
    if (io.empty() || !seen.insert(io).second) throw SemanticError("duplicate or empty io pin name '" + io + "'");
  }
  net_of_pin_.assign(pin_count(), -1);
  for (int e = 0; e < static_cast<int>(net_members.size()); ++e) {
    auto& members = net_members[e];
    if (members.size() < 2) throw SemanticError("net " + std::to_string(e) + " has fewer than 2 pins");
    for (int p : members) {
      if (p < 0 || p >= pin_count()) throw SemanticError("net " + std::to_string(e) + " references unknown pin");
      if (net_of_pin_[p] != -1)
        throw SemanticError("pin " + pin_name(p) + " belongs to nets " + std::to_string(net_of_pin_[p]) + " and " +
                            std::to_string(e));
      net_of_pin_[p] = e;
    }
    const bool large = static_cast<int>(members.size()) >= kLargeNetPins;
    nets_.push_back({e, std::move(members), large});
  }
  for (int p = 0; p < pin_count(); ++p) {
    if (net_of_pin_[p] == -1) throw SemanticError("pin " + pin_name(p) + " is not on any net");
  }
  nets_of_component_.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) nets_of_component_[i][k] = net_of_pin_[3 * i + k];
  }
}

int LogicalCircuit::count(Kind k) const {
  return static_cast<int>(std::count_if(components_.begin(), components_.end(), [k](const auto& c) { return c.kind == k; }));
}

std::optional<int> LogicalCircuit::find_io(std::string_view name) const {
  for (int i = 0; i < io_count(); ++i) {
    if (io_pins_[i] == name) return i;
  }
  return std::nullopt;
}

std::string LogicalCircuit::pin_name(int pin) const {
  if (is_io_pin(pin)) {
    int io = io_of_pin(pin);
    return "io." + (io < io_count() ? io_pins_[io] : std::to_string(io));
  }
  return "c" + std::to_string(component_of_pin(pin)) + "." + std::to_string(pin % 3);
}

std::optional<int> LogicalCircuit::parse_pin(std::string_view ref) const {
  if (text::starts_with(ref, "io.")) {
    auto io = find_io(ref.substr(3));
    if (!io) return std::nullopt;
    return io_pin(*io);
  }
  if (ref.size() < 4 || ref[0] != 'c') return std::nullopt;
  auto dot = ref.find('.');
  if (dot == std::string_view::npos || dot + 2 != ref.size()) return std::nullopt;
  int comp = 0;
  auto body = ref.substr(1, dot - 1);
  auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), comp);
  if (ec != std::errc() || p != body.data() + body.size()) return std::nullopt;
  int slot = ref[dot + 1] - '0';
  if (slot < 0 || slot > 2 || comp < 0 || comp >= component_count()) return std::nullopt;
  return component_pin(comp, slot);
}

// ---------------------------------------------------------------------------

std::array<Point, 3> pin_positions(const PhysicalComponent& c) {
  const double half = c.length() / 2.0;
  const double dx = half * std::cos(c.theta);
  const double dy = half * std::sin(c.theta);
  return {c.center, Point{c.center.x + dx, c.center.y + dy}, Point{c.center.x - dx, c.center.y - dy}};
}

Rect body_box(const PhysicalComponent& c) {
  const double l = c.length();
  const double ca = std::abs(std::cos(c.theta));
  const double sa = std::abs(std::sin(c.theta));
  const double hx = ca * l / 2.0 + sa * l / 4.0;
  const double hy = sa * l / 2.0 + ca * l / 4.0;
  return {c.center.x - hx, c.center.y - hy, 2.0 * hx, 2.0 * hy};
}

int PhysicalLayout::count(Kind k) const {
  return static_cast<int>(std::count_if(components.begin(), components.end(), [k](const auto& c) { return c.kind == k; }));
}

void validate_layout(const PhysicalLayout& layout) {
  if (!(layout.width > 0 && layout.height > 0 && layout.rho > 0)) throw SemanticError("substrate dimensions must be positive");
  for (std::size_t i = 0; i < layout.io_slots.size(); ++i) {
    Point s = layout.io_slots[i];
    const double eps = 1e-6;
    bool on_x = std::abs(s.x) < eps || std::abs(s.x - layout.width) < eps;
    bool on_y = std::abs(s.y) < eps || std::abs(s.y - layout.height) < eps;
    bool inside = s.x >= -eps && s.x <= layout.width + eps && s.y >= -eps && s.y <= layout.height + eps;
    if (!inside || !(on_x || on_y)) throw SemanticError("io slot " + std::to_string(i) + " is not on the substrate boundary");
  }
  // Bucket bodies by pitch-sized cells; only neighbouring cells can overlap.
  const double cell = std::max(layout.rho, 1.0);
  std::map<std::pair<long, long>, std::vector<int>> buckets;
  std::vector<Rect> boxes;
  boxes.reserve(layout.components.size());
  for (const auto& c : layout.components) boxes.push_back(body_box(c));
  for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
    long bx = static_cast<long>(std::floor(layout.components[i].center.x / cell));
    long by = static_cast<long>(std::floor(layout.components[i].center.y / cell));
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find({bx + dx, by + dy});
        if (it == buckets.end()) continue;
        for (int j : it->second) {
          const Rect& a = boxes[i];
          const Rect& b = boxes[j];
          if (a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h)
            throw SemanticError("components " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
        }
      }
    }
    buckets[{bx, by}].push_back(i);
  }
}

// ---------------------------------------------------------------------------

bool Placement::is_total() const {
  return std::none_of(comp_map.begin(), comp_map.end(), [](int v) { return v == kUnmapped; }) &&
         std::none_of(io_map.begin(), io_map.end(), [](int v) { return v == kUnmapped; });
}

void validate_placement(const Placement& p, const LogicalCircuit& c, const PhysicalLayout& layout) {
  if (static_cast<int>(p.comp_map.size()) != c.component_count() || static_cast<int>(p.io_map.size()) != c.io_count())
    throw SemanticError("placement size does not match circuit");
  std::vector<int> used(layout.components.size(), -1);
  for (int i = 0; i < c.component_count(); ++i) {
    int j = p.comp_map[i];
    if (j == kUnmapped) continue;
    if (j < 0 || j >= static_cast<int>(layout.components.size())) throw SemanticError("c" + std::to_string(i) + " maps to unknown component");
    if (used[j] != -1) throw SemanticError("physical component p" + std::to_string(j) + " used twice");
    if (layout.components[j].kind != c.components()[i].kind) throw SemanticError("c" + std::to_string(i) + " type mismatch");
    used[j] = i;
  }
  std::vector<int> slot_used(layout.io_slots.size(), -1);
  for (int i = 0; i < c.io_count(); ++i) {
    int s = p.io_map[i];
    if (s == kUnmapped) continue;
    if (s < 0 || s >= static_cast<int>(layout.io_slots.size())) throw SemanticError("io." + c.io_pins()[i] + " maps to unknown slot");
    if (slot_used[s] != -1) throw SemanticError("slot" + std::to_string(s) + " used twice");
    slot_used[s] = i;
  }
}

std::optional<Point> pin_location(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& p, int pin) {
  if (c.is_io_pin(pin)) {
    int s = p.io_map[c.io_of_pin(pin)];
    if (s == kUnmapped) return std::nullopt;
    return layout.io_slots[s];
  }
  int j = p.comp_map[c.component_of_pin(pin)];
  if (j == kUnmapped) return std::nullopt;
  return pin_positions(layout.components[j])[pin % 3];
}

// ---------------------------------------------------------------------------

double RoutingSolution::wire_length() const {
  double total = 0.0;
  for (const auto& r : sequence) {
    if (auto* w = std::get_if<Wire>(&r)) total += w->length();
  }
  return total;
}

double RoutingSolution::wire_length(bool inter_block) const {
  double total = 0.0;
  for (const auto& r : sequence) {
    if (auto* w = std::get_if<Wire>(&r); w && w->inter_block == inter_block) total += w->length();
  }
  return total;
}

int RoutingSolution::insulator_count() const {
  return static_cast<int>(std::count_if(sequence.begin(), sequence.end(), [](const auto& r) { return std::holds_alternative<Insulator>(r); }));
}

int RoutingSolution::failed_nets() const {
  std::set<int> nets;
  for (const auto& f : failures) nets.insert(f.net);
  return static_cast<int>(nets.size());
}

std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> RoutingSolution::per_net_edges(int net_count) const {
  std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> out(net_count);
  if (grid <= 0) return out;
  for (const auto& r : sequence) {
    const auto* w = std::get_if<Wire>(&r);
    if (!w || w->net < 0 || w->net >= net_count) continue;
    auto ax = std::llround(w->a.x / grid), ay = std::llround(w->a.y / grid);
    auto bx = std::llround(w->b.x / grid), by = std::llround(w->b.y / grid);
    auto sx = (bx > ax) - (bx < ax), sy = (by > ay) - (by < ay);
    if (sx != 0 && sy != 0) continue;  // not axis-aligned; drc reports it
    long long steps = std::max(std::llabs(bx - ax), std::llabs(by - ay));
    for (long long k = 0; k < steps; ++k) {
      auto u = pack_vertex(ax + sx * k, ay + sy * k);
      auto v = pack_vertex(ax + sx * (k + 1), ay + sy * (k + 1));
      out[w->net].emplace_back(std::min(u, v), std::max(u, v));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Formats

using text::Line;

std::string serialize_netlist(const LogicalCircuit& c) {
  std::string out = "nlc 1\n";
  if (!c.name().empty()) out += "name " + c.name() + "\n";
  for (const auto& comp : c.components()) {
    out += "comp " + std::to_string(comp.id) + " " + std::string(to_string(comp.kind));
    if (!comp.module.empty()) out += " module=" + comp.module;
    out += "\n";
  }
  for (const auto& io : c.io_pins()) out += "io " + io + "\n";
  for (const auto& net : c.nets()) {
    out += "net " + std::to_string(net.id) + ":";
    for (int p : net.members) out += " " + c.pin_name(p);
    out += "\n";
  }
  return out;
}

LogicalCircuit parse_netlist(std::string_view doc) {
  auto lines = text::tokenize(doc);
  text::expect_header(lines, "nlc", 1);
  std::string name;
  std::map<int, std::pair<Kind, std::string>> comps;
  std::vector<std::string> ios;
  std::map<int, std::pair<int, std::vector<std::string_view>>> nets;  // id -> (line, refs)
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const Line& l = lines[i];
    const auto& t = l.tokens;
    if (t[0] == "name") {
      if (t.size() != 2) text::fail(l, "expected 'name <string>'");
      name = std::string(t[1]);
    } else if (t[0] == "comp") {
      if (t.size() < 3 || t.size() > 4) text::fail(l, "expected 'comp <id> <pmos|nmos> [module=<tag>]'");
      int id = text::to_int(l, t[1]);
      auto kind = parse_kind(t[2]);
      if (!kind) throw SemanticError("line " + std::to_string(l.number) + ": unknown component kind '" + std::string(t[2]) + "'");
      std::string module;
      if (t.size() == 4) {
        if (!text::starts_with(t[3], "module=") || t[3].size() == 7) text::fail(l, "expected module=<tag>");
        module = std::string(t[3].substr(7));
      }
      if (!comps.emplace(id, std::make_pair(*kind, module)).second) text::fail(l, "duplicate component id");
    } else if (t[0] == "io") {
      if (t.size() != 2) text::fail(l, "expected 'io <name>'");
      ios.emplace_back(t[1]);
    } else if (t[0] == "net") {
      if (t.size() < 2 || t[1].empty() || t[1].back() != ':') text::fail(l, "expected 'net <id>: <pin-ref>+'");
      int id = text::to_int(l, t[1].substr(0, t[1].size() - 1));
      std::vector<std::string_view> refs(t.begin() + 2, t.end());
      if (!nets.emplace(id, std::make_pair(l.number, refs)).second) text::fail(l, "duplicate net id");
    } else {
      text::fail(l, "unknown directive '" + std::string(t[0]) + "'");
    }
  }
  if (comps.empty()) throw SemanticError("netlist has no components");
  std::vector<Kind> kinds;
  std::vector<std::string> modules;
  int expect = 0;
  for (auto& [id, v] : comps) {
    if (id != expect++) throw SemanticError("component ids must be dense from 0");
    kinds.push_back(v.first);
    modules.push_back(v.second);
  }
  // Resolve pin references against a shell circuit with the right pin space.
  const int n = static_cast<int>(kinds.size());
  auto resolve = [&](std::string_view ref, int line) -> int {
    if (text::starts_with(ref, "io.")) {
      auto it = std::find(ios.begin(), ios.end(), ref.substr(3));
      if (it == ios.end()) throw SemanticError("line " + std::to_string(line) + ": unknown io pin '" + std::string(ref) + "'");
      return 3 * n + static_cast<int>(it - ios.begin());
    }
    auto dot = ref.find('.');
    if (ref.size() < 4 || ref[0] != 'c' || dot == std::string_view::npos || dot + 2 != ref.size())
      throw ParseError(line, "bad pin reference '" + std::string(ref) + "'");
    int comp = -1;
    auto body = ref.substr(1, dot - 1);
    auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), comp);
    int slot = ref[dot + 1] - '0';
    if (ec != std::errc() || p != body.data() + body.size() || slot < 0 || slot > 2)
      throw ParseError(line, "bad pin reference '" + std::string(ref) + "'");
    if (comp < 0 || comp >= n) throw SemanticError("line " + std::to_string(line) + ": unknown component in '" + std::string(ref) + "'");
    return 3 * comp + slot;
  };
  std::vector<std::vector<int>> members;
  expect = 0;
  for (auto& [id, v] : nets) {
    if (id != expect++) throw SemanticError("net ids must be dense from 0");
    std::vector<int> m;
    for (auto ref : v.second) m.push_back(resolve(ref, v.first));
    members.push_back(std::move(m));
  }
  bool any_module = std::any_of(modules.begin(), modules.end(), [](const auto& s) { return !s.empty(); });
  return LogicalCircuit(name, std::move(kinds), any_module ? std::move(modules) : std::vector<std::string>{}, std::move(ios),
                        std::move(members));
}

std::string serialize_layout(const PhysicalLayout& layout) {
  std::string out = "lay 1\n";
  out += "substrate " + fmt3(layout.width) + " " + fmt3(layout.height) + " " + fmt3(layout.rho) + "\n";
  char buf[160];
  for (const auto& c : layout.components) {
    std::snprintf(buf, sizeof buf, "comp %d %s %s %s %.6f\n", c.id, std::string(to_string(c.kind)).c_str(), fmt3(c.center.x).c_str(),
                  fmt3(c.center.y).c_str(), c.theta);
    out += buf;
  }
  for (const auto& s : layout.io_slots) out += "slot " + fmt3(s.x) + " " + fmt3(s.y) + "\n";
  return out;
}

PhysicalLayout parse_layout(std::string_view doc) {
  auto lines = text::tokenize(doc);
  text::expect_header(lines, "lay", 1);
  PhysicalLayout layout;
  bool have_substrate = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const Line& l = lines[i];
    const auto& t = l.tokens;
    if (t[0] == "substrate") {
      if (t.size() != 4) text::fail(l, "expected 'substrate <W> <H> <rho>'");
      layout.width = text::to_double(l, t[1]);
      layout.height = text::to_double(l, t[2]);
      layout.rho = text::to_double(l, t[3]);
      have_substrate = true;
    } else if (t[0] == "comp") {
      if (t.size() != 6) text::fail(l, "expected 'comp <id> <kind> <x> <y> <theta>'");
      PhysicalComponent c;
      c.id = text::to_int(l, t[1]);
      auto kind = parse_kind(t[2]);
      if (!kind) throw SemanticError("line " + std::to_string(l.number) + ": unknown component kind");
      c.kind = *kind;
      c.center = {text::to_double(l, t[3]), text::to_double(l, t[4])};
      c.theta = text::to_double(l, t[5]);
      if (c.id != static_cast<int>(layout.components.size())) text::fail(l, "component ids must be dense and ordered");
      layout.components.push_back(c);
    } else if (t[0] == "slot") {
      if (t.size() != 3) text::fail(l, "expected 'slot <x> <y>'");
      layout.io_slots.push_back({text::to_double(l, t[1]), text::to_double(l, t[2])});
    } else {
      text::fail(l, "unknown directive '" + std::string(t[0]) + "'");
    }
  }
  if (!have_substrate) throw ParseError(1, "missing substrate line");
  return layout;
}

std::string serialize_placement(const Placement& p, const LogicalCircuit& c) {
  std::string out = "plc 1\n";
  for (int i = 0; i < static_cast<int>(p.comp_map.size()); ++i) {
    if (p.comp_map[i] != kUnmapped) out += "map c" + std::to_string(i) + " -> p" + std::to_string(p.comp_map[i]) + "\n";
  }
  for (int i = 0; i < static_cast<int>(p.io_map.size()); ++i) {
    if (p.io_map[i] != kUnmapped) out += "map io." + c.io_pins()[i] + " -> slot" + std::to_string(p.io_map[i]) + "\n";
  }
  return out;
}

Placement parse_placement(std::string_view doc, const LogicalCircuit& c) {
  auto lines = text::tokenize(doc);
  text::expect_header(lines, "plc", 1);
  Placement p = Placement::empty_for(c);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const Line& l = lines[i];
    const auto& t = l.tokens;
    if (t.size() != 4 || t[0] != "map" || t[2] != "->") text::fail(l, "expected 'map <logical> -> <physical>'");
    if (text::starts_with(t[1], "io.")) {
      auto io = c.find_io(t[1].substr(3));
      if (!io) throw SemanticError("line " + std::to_string(l.number) + ": unknown io pin");
      if (!text::starts_with(t[3], "slot")) text::fail(l, "io pins map to slot<k>");
      if (p.io_map[*io] != kUnmapped) text::fail(l, "io pin mapped twice");
      p.io_map[*io] = text::to_int(l, t[3].substr(4));
    } else {
      if (!text::starts_with(t[1], "c") || !text::starts_with(t[3], "p")) text::fail(l, "expected c<l> -> p<p>");
      int comp = text::to_int(l, t[1].substr(1));
      if (comp < 0 || comp >= c.component_count()) throw SemanticError("line " + std::to_string(l.number) + ": unknown component");
      if (p.comp_map[comp] != kUnmapped) text::fail(l, "component mapped twice");
      p.comp_map[comp] = text::to_int(l, t[3].substr(1));
    }
  }
  return p;
}

std::string serialize_routing(const RoutingSolution& r, const LogicalCircuit& c) {
  std::string out = "rte 1\n";
  out += "grid " + fmt3(r.grid) + "\n";
  for (const auto& s : r.stubs) out += "stub " + c.pin_name(s.pin) + " " + fmt3(s.vertex.x) + " " + fmt3(s.vertex.y) + "\n";
  for (const auto& prim : r.sequence) {
    if (const auto* w = std::get_if<Wire>(&prim)) {
      out += "wire " + fmt3(w->a.x) + " " + fmt3(w->a.y) + " " + fmt3(w->b.x) + " " + fmt3(w->b.y) + " net=" + std::to_string(w->net);
      if (w->inter_block) out += " stage=inter";
      out += "\n";
    } else {
      const auto& ins = std::get<Insulator>(prim);
      out += "insu " + fmt3(ins.p.x) + " " + fmt3(ins.p.y) + "\n";
    }
  }
  for (const auto& f : r.failures) out += "fail net=" + std::to_string(f.net) + " reason=" + f.reason + "\n";
  return out;
}

RoutingSolution parse_routing(std::string_view doc, const LogicalCircuit& c) {
  auto lines = text::tokenize(doc);
  text::expect_header(lines, "rte", 1);
  RoutingSolution r;
  auto keyed_int = [](const Line& l, std::string_view tok, std::string_view key) {
    if (!text::starts_with(tok, key)) text::fail(l, "expected " + std::string(key) + "<value>");
    return text::to_int(l, tok.substr(key.size()));
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const Line& l = lines[i];
    const auto& t = l.tokens;
    if (t[0] == "grid" && t.size() == 2) {
      r.grid = text::to_double(l, t[1]);
    } else if (t[0] == "stub" && t.size() == 4) {
      auto pin = c.parse_pin(t[1]);
      if (!pin) throw SemanticError("line " + std::to_string(l.number) + ": unknown pin '" + std::string(t[1]) + "'");
      r.stubs.push_back({*pin, {text::to_double(l, t[2]), text::to_double(l, t[3])}});
    } else if (t[0] == "wire" && (t.size() == 6 || t.size() == 7)) {
      Wire w;
      w.a = {text::to_double(l, t[1]), text::to_double(l, t[2])};
      w.b = {text::to_double(l, t[3]), text::to_double(l, t[4])};
      w.net = keyed_int(l, t[5], "net=");
      if (t.size() == 7) {
        if (t[6] != "stage=inter") text::fail(l, "unknown wire attribute");
        w.inter_block = true;
      }
      r.sequence.emplace_back(w);
    } else if (t[0] == "insu" && t.size() == 3) {
      r.sequence.emplace_back(Insulator{{text::to_double(l, t[1]), text::to_double(l, t[2])}});
    } else if (t[0] == "fail" && t.size() == 3) {
      if (!text::starts_with(t[2], "reason=")) text::fail(l, "expected reason=<code>");
      r.failures.push_back({keyed_int(l, t[1], "net="), std::string(t[2].substr(7))});
    } else {
      text::fail(l, "unrecognised line");
    }
  }
  return r;
}

}  // namespace nepr
