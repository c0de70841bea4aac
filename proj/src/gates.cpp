#include "nepr/gates.hpp"

#include <unordered_map>

#include "text.hpp"

namespace nepr {

namespace {

TransistorTemplate P(std::string g, std::string s, std::string d) { return {Kind::pmos, std::move(g), std::move(s), std::move(d)}; }
TransistorTemplate N(std::string g, std::string s, std::string d) { return {Kind::nmos, std::move(g), std::move(s), std::move(d)}; }

void append_inverter(std::vector<TransistorTemplate>& t, const std::string& in, const std::string& out) {
  t.push_back(P(in, "VDD", out));
  t.push_back(N(in, "GND", out));
}

// Transmission gate between a and b, conducting when en=1 (enb=0).
void append_tgate(std::vector<TransistorTemplate>& t, const std::string& en, const std::string& enb, const std::string& a,
                  const std::string& b) {
  t.push_back(N(en, a, b));
  t.push_back(P(enb, a, b));
}

GateLibrary make_standard() {
  GateLibrary lib;
  {
    GateTemplate g{{"A"}, {"Y"}, {}};
    append_inverter(g.transistors, "A", "Y");
    lib.add("INV", g);
  }
  {
    GateTemplate g{{"A", "B"}, {"Y"}, {P("A", "VDD", "Y"), P("B", "VDD", "Y"), N("A", "m", "Y"), N("B", "GND", "m")}};
    lib.add("NAND2", g);
  }
  {
    GateTemplate g{{"A", "B"}, {"Y"}, {P("A", "VDD", "m"), P("B", "m", "Y"), N("A", "GND", "Y"), N("B", "GND", "Y")}};
    lib.add("NOR2", g);
  }
  {
    GateTemplate g{{"A", "B"}, {"Y"}, {P("A", "VDD", "n"), P("B", "VDD", "n"), N("A", "m", "n"), N("B", "GND", "m")}};
    append_inverter(g.transistors, "n", "Y");
    lib.add("AND2", g);
  }
  {
    GateTemplate g{{"A", "B"}, {"Y"}, {P("A", "VDD", "m"), P("B", "m", "n"), N("A", "GND", "n"), N("B", "GND", "n")}};
    append_inverter(g.transistors, "n", "Y");
    lib.add("OR2", g);
  }
  {
    // Both networks in sum-of-products form: pull-up conducts for A!=B, pull-down for A==B.
    GateTemplate g{{"A", "B"}, {"Y"}, {}};
    append_inverter(g.transistors, "A", "an");
    append_inverter(g.transistors, "B", "bn");
    g.transistors.push_back(P("an", "VDD", "u1"));
    g.transistors.push_back(P("B", "u1", "Y"));
    g.transistors.push_back(P("A", "VDD", "u2"));
    g.transistors.push_back(P("bn", "u2", "Y"));
    g.transistors.push_back(N("A", "GND", "l1"));
    g.transistors.push_back(N("B", "l1", "Y"));
    g.transistors.push_back(N("an", "GND", "l2"));
    g.transistors.push_back(N("bn", "l2", "Y"));
    lib.add("XOR2", g);
  }
  {
    // Y = S ? B : A via AOI22 and an output inverter.
    GateTemplate g{{"A", "B", "S"}, {"Y"}, {}};
    append_inverter(g.transistors, "S", "sn");
    g.transistors.push_back(N("A", "GND", "k1"));
    g.transistors.push_back(N("sn", "k1", "yn"));
    g.transistors.push_back(N("B", "GND", "k2"));
    g.transistors.push_back(N("S", "k2", "yn"));
    g.transistors.push_back(P("A", "VDD", "j"));
    g.transistors.push_back(P("sn", "VDD", "j"));
    g.transistors.push_back(P("B", "j", "yn"));
    g.transistors.push_back(P("S", "j", "yn"));
    append_inverter(g.transistors, "yn", "Y");
    lib.add("MUX2", g);
  }
  {
    // Positive-edge master/slave flip-flop with transmission-gate latches.
    GateTemplate g{{"D", "CLK"}, {"Q"}, {}};
    auto& t = g.transistors;
    append_inverter(t, "CLK", "ckb");
    append_inverter(t, "ckb", "cki");
    append_inverter(t, "D", "dn");
    append_tgate(t, "ckb", "cki", "dn", "m1");
    append_inverter(t, "m1", "m2");
    append_inverter(t, "m2", "m3");
    append_tgate(t, "cki", "ckb", "m3", "m1");
    append_tgate(t, "cki", "ckb", "m2", "s1");
    append_inverter(t, "s1", "s2");
    append_inverter(t, "s2", "s3");
    append_tgate(t, "ckb", "cki", "s3", "s1");
    append_inverter(t, "s2", "Q");
    lib.add("DFF", g);
  }
  return lib;
}

}  // namespace

const GateTemplate* GateLibrary::find(std::string_view type) const {
  auto it = templates_.find(type);
  return it == templates_.end() ? nullptr : &it->second;
}

std::vector<std::string> GateLibrary::types() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : templates_) out.push_back(k);
  return out;
}

const GateLibrary& GateLibrary::standard() {
  static const GateLibrary lib = make_standard();
  return lib;
}

// ---------------------------------------------------------------------------

GateNetlist parse_gate_netlist(std::string_view doc) {
  auto lines = text::tokenize(doc);
  text::expect_header(lines, "gnl", 1);
  GateNetlist g;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto& t = l.tokens;
    if (t[0] == "name" && t.size() == 2) {
      g.name = std::string(t[1]);
    } else if (t[0] == "input") {
      for (std::size_t k = 1; k < t.size(); ++k) g.inputs.emplace_back(t[k]);
    } else if (t[0] == "output") {
      for (std::size_t k = 1; k < t.size(); ++k) g.outputs.emplace_back(t[k]);
    } else if (t[0] == "gate") {
      if (t.size() < 5) text::fail(l, "expected 'gate <TYPE> <inst> <in>+ -> <out>+'");
      GateInstance inst{std::string(t[1]), std::string(t[2]), {}, {}, {}};
      bool outputs = false;
      for (std::size_t k = 3; k < t.size(); ++k) {
        if (t[k] == "->") {
          if (outputs) text::fail(l, "duplicate '->'");
          outputs = true;
        } else if (text::starts_with(t[k], "module=")) {
          inst.module = std::string(t[k].substr(7));
        } else {
          (outputs ? inst.outputs : inst.inputs).emplace_back(t[k]);
        }
      }
      if (!outputs || inst.outputs.empty()) text::fail(l, "gate has no outputs");
      g.gates.push_back(std::move(inst));
    } else {
      text::fail(l, "unknown directive '" + std::string(t[0]) + "'");
    }
  }
  return g;
}

std::string serialize_gate_netlist(const GateNetlist& g) {
  std::string out = "gnl 1\n";
  if (!g.name.empty()) out += "name " + g.name + "\n";
  if (!g.inputs.empty()) {
    out += "input";
    for (const auto& s : g.inputs) out += " " + s;
    out += "\n";
  }
  if (!g.outputs.empty()) {
    out += "output";
    for (const auto& s : g.outputs) out += " " + s;
    out += "\n";
  }
  for (const auto& gate : g.gates) {
    out += "gate " + gate.type + " " + gate.name;
    for (const auto& s : gate.inputs) out += " " + s;
    out += " ->";
    for (const auto& s : gate.outputs) out += " " + s;
    if (!gate.module.empty()) out += " module=" + gate.module;
    out += "\n";
  }
  return out;
}

LogicalCircuit expand_gates(const GateNetlist& g, const GateLibrary& lib) {
  std::vector<std::string> io_names = g.inputs;
  io_names.insert(io_names.end(), g.outputs.begin(), g.outputs.end());
  io_names.push_back("VDD");
  io_names.push_back("GND");

  std::unordered_map<std::string, int> net_index;
  std::vector<std::vector<int>> members;
  auto net_for = [&](const std::string& name) -> std::vector<int>& {
    auto [it, inserted] = net_index.emplace(name, static_cast<int>(members.size()));
    if (inserted) members.emplace_back();
    return members[it->second];
  };
  for (const auto& io : io_names) net_for(io);

  std::vector<Kind> kinds;
  std::vector<std::string> modules;
  struct PendingPin {
    int comp;
    int slot;
    std::string net;
  };
  std::vector<PendingPin> pins;
  for (const auto& inst : g.gates) {
    const GateTemplate* t = lib.find(inst.type);
    if (!t) throw UnknownGateError("unknown gate type '" + inst.type + "' (instance " + inst.name + ")");
    if (inst.inputs.size() != t->inputs.size() || inst.outputs.size() != t->outputs.size())
      throw SemanticError("gate " + inst.name + " (" + inst.type + ") has wrong port count");
    std::unordered_map<std::string, std::string> bind;
    for (std::size_t k = 0; k < t->inputs.size(); ++k) bind[t->inputs[k]] = inst.inputs[k];
    for (std::size_t k = 0; k < t->outputs.size(); ++k) bind[t->outputs[k]] = inst.outputs[k];
    auto resolve = [&](const std::string& local) {
      if (local == "VDD" || local == "GND") return local;
      if (auto it = bind.find(local); it != bind.end()) return it->second;
      return inst.name + "/" + local;
    };
    for (const auto& tr : t->transistors) {
      int comp = static_cast<int>(kinds.size());
      kinds.push_back(tr.kind);
      modules.push_back(inst.module);
      pins.push_back({comp, 0, resolve(tr.gate)});
      pins.push_back({comp, 1, resolve(tr.source)});
      pins.push_back({comp, 2, resolve(tr.drain)});
    }
  }
  if (kinds.empty()) throw SemanticError("gate netlist expands to no transistors");
  const int n = static_cast<int>(kinds.size());
  for (const auto& p : pins) net_for(p.net).push_back(3 * p.comp + p.slot);
  for (int io = 0; io < static_cast<int>(io_names.size()); ++io) {
    // io pins come first in their nets for readability
    auto& m = members[net_index.at(io_names[io])];
    m.insert(m.begin(), 3 * n + io);
  }
  for (const auto& [name, idx] : net_index) {
    if (members[idx].size() < 2) throw SemanticError("signal '" + name + "' connects fewer than 2 pins");
  }
  bool any_module = false;
  for (const auto& m : modules) any_module = any_module || !m.empty();
  return LogicalCircuit(g.name, std::move(kinds), any_module ? std::move(modules) : std::vector<std::string>{}, std::move(io_names),
                        std::move(members));
}

}  // namespace nepr
