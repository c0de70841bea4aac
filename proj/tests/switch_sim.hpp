#pragma once

// Switch-level simulator over a transistor netlist. Nets are nodes; a pMOS
// conducts when its gate is 0, an nMOS when it is 1. Nodes not connected to
// a driver keep their previous value, which is enough for latches.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nepr/model.hpp"

namespace nepr::testing {

class SwitchSim {
 public:
  explicit SwitchSim(const LogicalCircuit& c) : c_(c), value_(c.net_count(), 0) {
    for (int io = 0; io < c.io_count(); ++io) io_net_[c.io_pins()[io]] = c.net_of_pin(c.io_pin(io));
  }

  void set(const std::string& io, int v) { driven_[io_net_.at(io)] = v; }
  int get(const std::string& io) const { return value_[io_net_.at(io)]; }

  /// Relaxes to a fixed point; throws on a VDD/GND short or oscillation.
  void settle() {
    driven_[io_net_.at("VDD")] = 1;
    driven_[io_net_.at("GND")] = 0;
    for (auto [n, v] : driven_) value_[n] = v;
    const int n_nets = static_cast<int>(value_.size());
    for (int iter = 0; iter < 100000; ++iter) {
      std::vector<std::vector<int>> adj(n_nets);
      for (const auto& comp : c_.components()) {
        const auto& nets = c_.nets_of_component(comp.id);
        int gv = value_[nets[0]];
        bool on = comp.kind == Kind::nmos ? gv == 1 : gv == 0;
        if (on) {
          adj[nets[1]].push_back(nets[2]);
          adj[nets[2]].push_back(nets[1]);
        }
      }
      // Flood from every driver without passing through other drivers.
      std::vector<int> reach(n_nets, 0);  // bit0: reaches a 0, bit1: reaches a 1
      for (auto [src, v] : driven_) {
        std::vector<int> stack{src};
        std::vector<char> seen(n_nets, 0);
        seen[src] = 1;
        while (!stack.empty()) {
          int u = stack.back();
          stack.pop_back();
          reach[u] |= 1 << v;
          for (int w : adj[u]) {
            if (seen[w] || driven_.count(w)) continue;
            seen[w] = 1;
            stack.push_back(w);
          }
        }
      }
      // Contention during relaxation is transient; only a settled short is an error.
      bool changed = false;
      bool contention = false;
      for (int n = 0; n < n_nets; ++n) {
        if (driven_.count(n)) continue;
        if (reach[n] == 3) {
          contention = true;
        } else if (!changed && reach[n] != 0 && value_[n] != reach[n] - 1) {
          // one node per step: synchronous updates make latches ring
          value_[n] = reach[n] - 1;
          changed = true;
        }
      }
      if (!changed) {
        if (contention) throw std::runtime_error("short between drivers");
        return;
      }
    }
    throw std::runtime_error("circuit did not settle");
  }

 private:
  const LogicalCircuit& c_;
  std::vector<int> value_;
  std::map<std::string, int> io_net_;
  std::map<int, int> driven_;
};

}  // namespace nepr::testing
