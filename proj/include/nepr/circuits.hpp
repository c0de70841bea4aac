#pragma once

// Built-in benchmark circuits, described at gate level.

#include <string>
#include <vector>

#include "nepr/gates.hpp"

namespace nepr {

/// Small helper for writing gate netlists programmatically.
class GateBuilder {
 public:
  explicit GateBuilder(std::string name) { g_.name = std::move(name); }

  std::string input(const std::string& name);
  /// Adds a gate; returns its (single) output signal, freshly named if `out` is empty.
  std::string gate(const std::string& type, std::vector<std::string> ins, std::string out = {});
  /// Renames `signal` to `name` everywhere and lists it as a primary output.
  void output(const std::string& signal, const std::string& name);
  void set_module(std::string tag) { module_ = std::move(tag); }

  std::string dff(const std::string& d, const std::string& clk) { return gate("DFF", {d, clk}); }
  /// Returns {sum, carry}.
  std::pair<std::string, std::string> half_adder(const std::string& a, const std::string& b);
  std::pair<std::string, std::string> full_adder(const std::string& a, const std::string& b, const std::string& c);
  /// Ripple-carry sum of two little-endian words; result has max(|a|,|b|)+1 bits.
  /// A non-empty `cin` feeds the lowest bit.
  std::vector<std::string> add(const std::vector<std::string>& a, const std::vector<std::string>& b, const std::string& cin = {});
  /// Unsigned shift-add array multiplier, |a|+|b| result bits.
  std::vector<std::string> multiply(const std::vector<std::string>& a, const std::vector<std::string>& b);

  const GateNetlist& netlist() const { return g_; }
  GateNetlist take() { return std::move(g_); }

 private:
  GateNetlist g_;
  std::string module_;
  int counter_ = 0;
};

/// One-bit full adder: 2 XOR2 + 2 AND2 + OR2, 42 transistors.
GateNetlist full_adder_gates();

/// Four-input 4-bit perceptron with serially loaded weights and threshold,
/// registered inputs and output. Roughly five thousand transistors.
GateNetlist perceptron_gates();

/// Two tagged modules ("A" and "B") with a narrow interface between them.
GateNetlist two_module_gates();

/// The names accepted by `builtin_circuit`.
std::vector<std::string> builtin_circuit_names();
/// Throws std::invalid_argument for unknown names.
GateNetlist builtin_circuit(const std::string& name);

}  // namespace nepr
