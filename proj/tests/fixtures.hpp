#pragma once

// Synthetic circuits shared by the unit tests.

#include <string>
#include <vector>

#include "nepr/circuits.hpp"
#include "nepr/gates.hpp"
#include "nepr/model.hpp"
#include "nepr/rng.hpp"

namespace nepr::testing {

inline LogicalCircuit inverter_chain(int n) {
  GateBuilder b("chain");
  std::string s = b.input("in");
  for (int i = 0; i < n; ++i) s = b.gate("INV", {s});
  b.output(s, "out");
  return expand_gates(b.take());
}

inline LogicalCircuit full_adder() { return expand_gates(full_adder_gates()); }

/// Random netlist: pins shuffled into nets of 2..max_net pins.
inline LogicalCircuit random_circuit(int n, int io, std::uint64_t seed, int max_net = 4) {
  Rng rng(seed);
  std::vector<Kind> kinds;
  for (int i = 0; i < n; ++i) kinds.push_back(rng.below(2) ? Kind::pmos : Kind::nmos);
  std::vector<std::string> ios;
  for (int i = 0; i < io; ++i) ios.push_back("p" + std::to_string(i));
  std::vector<int> pins(3 * n + io);
  for (int i = 0; i < static_cast<int>(pins.size()); ++i) pins[i] = i;
  rng.shuffle(pins);
  std::vector<std::vector<int>> nets;
  std::size_t k = 0;
  while (k < pins.size()) {
    std::size_t size = 2 + rng.below(max_net - 1);
    if (pins.size() - k < size + 2) size = pins.size() - k;
    nets.emplace_back(pins.begin() + k, pins.begin() + k + size);
    k += size;
  }
  return LogicalCircuit("random", kinds, {}, ios, nets);
}

/// Two disjoint inverter chains tagged "L" and "R".
inline LogicalCircuit two_islands(int gates_each) {
  GateBuilder b("islands");
  std::string l = b.input("l"), r = b.input("r");
  b.set_module("L");
  for (int i = 0; i < gates_each; ++i) l = b.gate("INV", {l});
  b.set_module("R");
  for (int i = 0; i < gates_each; ++i) r = b.gate("INV", {r});
  b.output(l, "lo");
  b.output(r, "ro");
  return expand_gates(b.take());
}

/// Two circuits side by side with no shared net; b's components follow a's.
inline LogicalCircuit disjoint_union(const LogicalCircuit& a, const LogicalCircuit& b) {
  std::vector<Kind> kinds;
  for (const auto& c : a.components()) kinds.push_back(c.kind);
  for (const auto& c : b.components()) kinds.push_back(c.kind);
  std::vector<std::string> ios;
  for (const auto& s : a.io_pins()) ios.push_back("a." + s);
  for (const auto& s : b.io_pins()) ios.push_back("b." + s);
  const int na = a.component_count(), nb = b.component_count(), n = na + nb;
  auto map_a = [&](int pin) { return a.is_io_pin(pin) ? 3 * n + a.io_of_pin(pin) : pin; };
  auto map_b = [&](int pin) { return b.is_io_pin(pin) ? 3 * n + a.io_count() + b.io_of_pin(pin) : pin + 3 * na; };
  std::vector<std::vector<int>> nets;
  for (const auto& e : a.nets()) {
    nets.emplace_back();
    for (int p : e.members) nets.back().push_back(map_a(p));
  }
  for (const auto& e : b.nets()) {
    nets.emplace_back();
    for (int p : e.members) nets.back().push_back(map_b(p));
  }
  return LogicalCircuit("union", kinds, {}, ios, nets);
}

/// Logical component i takes the first free physical component of its type;
/// io pin i takes slot i.
inline Placement greedy_placement(const LogicalCircuit& c, const PhysicalLayout& layout) {
  Placement m = Placement::empty_for(c);
  std::vector<char> used(layout.components.size(), 0);
  for (const auto& lc : c.components()) {
    for (const auto& pc : layout.components) {
      if (used[pc.id] || pc.kind != lc.kind) continue;
      used[pc.id] = 1;
      m.comp_map[lc.id] = pc.id;
      break;
    }
  }
  for (int i = 0; i < c.io_count() && i < static_cast<int>(layout.io_slots.size()); ++i) m.io_map[i] = i;
  return m;
}

}  // namespace nepr::testing
