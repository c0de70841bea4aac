#pragma once

// Gate-level netlists and their expansion into CMOS transistor circuits.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nepr/model.hpp"

namespace nepr {

struct TransistorTemplate {
  Kind kind = Kind::pmos;
  std::string gate;
  std::string source;
  std::string drain;
};

/// Transistor-level template of one gate type. Net names are port names,
/// the supplies "VDD"/"GND", or instance-local internal nodes.
struct GateTemplate {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<TransistorTemplate> transistors;
};

class GateLibrary {
 public:
  void add(std::string type, GateTemplate t) { templates_[std::move(type)] = std::move(t); }
  const GateTemplate* find(std::string_view type) const;
  std::vector<std::string> types() const;

  /// INV, NAND2, NOR2, AND2, OR2, XOR2, MUX2, DFF static CMOS templates.
  static const GateLibrary& standard();

 private:
  std::map<std::string, GateTemplate, std::less<>> templates_;
};

struct GateInstance {
  std::string type;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string module;
};

struct GateNetlist {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<GateInstance> gates;
};

class UnknownGateError : public SemanticError {
 public:
  using SemanticError::SemanticError;
};

/// `.gnl` format:
///   gnl 1
///   name <name>
///   input <sig>+
///   output <sig>+
///   gate <TYPE> <inst> <in>+ -> <out>+ [module=<tag>]
GateNetlist parse_gate_netlist(std::string_view text);
std::string serialize_gate_netlist(const GateNetlist& g);

/// Expands every gate to its template. I/O pins are the primary inputs and
/// outputs followed by VDD and GND. Module tags follow the gate's label.
LogicalCircuit expand_gates(const GateNetlist& g, const GateLibrary& lib = GateLibrary::standard());

}  // namespace nepr
