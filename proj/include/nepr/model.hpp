#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nepr/geometry.hpp"

namespace nepr {

// Technology constants, micrometres.
inline constexpr double kPmosLength = 0.150;
inline constexpr double kNmosLength = 0.130;
inline constexpr double kWireWidth = 0.100;
inline constexpr double kMinSeparation = 2.0 * kWireWidth;
/// Nets with at least this many pins are treated as power/clock nets.
inline constexpr int kLargeNetPins = 32;

enum class Kind : std::uint8_t { pmos, nmos };

std::string_view to_string(Kind k);
std::optional<Kind> parse_kind(std::string_view s);
inline double component_length(Kind k) { return k == Kind::pmos ? kPmosLength : kNmosLength; }

/// Syntax error in one of the text formats.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Well-formed input that violates a model invariant.
class SemanticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Logical circuit

struct LogicalComponent {
  int id = 0;
  Kind kind = Kind::pmos;
  std::array<int, 3> pins{};  // gate, source, drain
  std::string module;         // semantic group; empty when unknown

  friend bool operator==(const LogicalComponent&, const LogicalComponent&) = default;
};

struct Net {
  int id = 0;
  std::vector<int> members;  // pin ids
  bool is_large = false;

  friend bool operator==(const Net&, const Net&) = default;
};

/// Transistor-level netlist. Pin ids are dense: component c owns pins
/// 3c, 3c+1, 3c+2 (gate, source, drain); I/O pin i is 3N+i.
/// Construction validates every invariant and throws SemanticError.
class LogicalCircuit {
 public:
  LogicalCircuit() = default;
  LogicalCircuit(std::string name, std::vector<Kind> kinds, std::vector<std::string> modules,
                 std::vector<std::string> io_names, std::vector<std::vector<int>> net_members);

  const std::string& name() const { return name_; }
  const std::vector<LogicalComponent>& components() const { return components_; }
  const std::vector<std::string>& io_pins() const { return io_pins_; }
  const std::vector<Net>& nets() const { return nets_; }

  int component_count() const { return static_cast<int>(components_.size()); }
  int io_count() const { return static_cast<int>(io_pins_.size()); }
  int net_count() const { return static_cast<int>(nets_.size()); }
  int pin_count() const { return 3 * component_count() + io_count(); }
  int count(Kind k) const;

  static int component_pin(int comp, int slot) { return 3 * comp + slot; }
  int io_pin(int io) const { return 3 * component_count() + io; }
  bool is_io_pin(int pin) const { return pin >= 3 * component_count(); }
  int component_of_pin(int pin) const { return pin / 3; }
  int io_of_pin(int pin) const { return pin - 3 * component_count(); }
  std::optional<int> find_io(std::string_view name) const;

  int net_of_pin(int pin) const { return net_of_pin_[pin]; }
  const std::array<int, 3>& nets_of_component(int comp) const { return nets_of_component_[comp]; }

  /// "c<id>.<slot>" or "io.<name>"
  std::string pin_name(int pin) const;
  std::optional<int> parse_pin(std::string_view ref) const;

  friend bool operator==(const LogicalCircuit& a, const LogicalCircuit& b) {
    return a.name_ == b.name_ && a.components_ == b.components_ && a.io_pins_ == b.io_pins_ && a.nets_ == b.nets_;
  }

 private:
  std::string name_;
  std::vector<LogicalComponent> components_;
  std::vector<std::string> io_pins_;
  std::vector<Net> nets_;
  std::vector<int> net_of_pin_;
  std::vector<std::array<int, 3>> nets_of_component_;
};

// ---------------------------------------------------------------------------
// Physical layout

struct PhysicalComponent {
  int id = 0;
  Kind kind = Kind::pmos;
  Point center;
  double theta = 0.0;  // radians in [0, 2pi)

  double length() const { return component_length(kind); }

  friend bool operator==(const PhysicalComponent&, const PhysicalComponent&) = default;
};

/// Gate, source and drain positions: local offsets (0,0), (+L/2,0), (-L/2,0)
/// rotated by theta about the centre.
std::array<Point, 3> pin_positions(const PhysicalComponent& c);

/// Axis-aligned box of the rotated component body (L x L/2 rectangle).
Rect body_box(const PhysicalComponent& c);

struct PhysicalLayout {
  double width = 0.0;
  double height = 0.0;
  double rho = 0.0;  // mean component pitch
  std::vector<PhysicalComponent> components;
  std::vector<Point> io_slots;

  Rect substrate() const { return {0.0, 0.0, width, height}; }
  int count(Kind k) const;

  friend bool operator==(const PhysicalLayout&, const PhysicalLayout&) = default;
};

/// Throws SemanticError if a slot is off the boundary or bodies overlap.
void validate_layout(const PhysicalLayout& layout);

// ---------------------------------------------------------------------------
// Placement

inline constexpr int kUnmapped = -1;

struct Placement {
  std::vector<int> comp_map;  // logical component -> physical component
  std::vector<int> io_map;    // logical io -> io slot

  static Placement empty_for(const LogicalCircuit& c) {
    return {std::vector<int>(c.component_count(), kUnmapped), std::vector<int>(c.io_count(), kUnmapped)};
  }
  bool is_total() const;

  friend bool operator==(const Placement&, const Placement&) = default;
};

/// Checks injectivity, index ranges and type matching. Throws SemanticError.
void validate_placement(const Placement& p, const LogicalCircuit& c, const PhysicalLayout& layout);

/// Physical position of a logical pin under `p`; nullopt if unmapped.
std::optional<Point> pin_location(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& p, int pin);

// ---------------------------------------------------------------------------
// Routing

struct Wire {
  Point a;
  Point b;
  int net = -1;
  bool inter_block = false;

  double length() const { return euclidean(a, b); }
  friend bool operator==(const Wire&, const Wire&) = default;
};

struct Insulator {
  Point p;
  friend bool operator==(const Insulator&, const Insulator&) = default;
};

using RoutePrimitive = std::variant<Wire, Insulator>;

/// Grid vertex a pin is extended to before routing.
struct PinStub {
  int pin = -1;
  Point vertex;
  friend bool operator==(const PinStub&, const PinStub&) = default;
};

struct RouteFailure {
  int net = -1;
  std::string reason;
  friend bool operator==(const RouteFailure&, const RouteFailure&) = default;
};

/// Print-ordered wires and insulators. `grid` is 0 for free-form solutions
/// (direct-connect baselines), otherwise the routing grid spacing.
struct RoutingSolution {
  double grid = 0.0;
  std::vector<RoutePrimitive> sequence;
  std::vector<PinStub> stubs;
  std::vector<RouteFailure> failures;

  double wire_length() const;
  double wire_length(bool inter_block) const;
  int insulator_count() const;
  int failed_nets() const;

  /// Unit grid edges per net, as pairs of packed (ix, iy) vertex keys.
  std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> per_net_edges(int net_count) const;

  friend bool operator==(const RoutingSolution&, const RoutingSolution&) = default;
};

inline std::uint64_t pack_vertex(std::int64_t ix, std::int64_t iy) {
  return (static_cast<std::uint64_t>(ix) << 32) | static_cast<std::uint32_t>(iy);
}

// ---------------------------------------------------------------------------
// Text formats. serialize(parse(text)) reproduces any canonical document.

std::string serialize_netlist(const LogicalCircuit& c);
LogicalCircuit parse_netlist(std::string_view text);

std::string serialize_layout(const PhysicalLayout& layout);
PhysicalLayout parse_layout(std::string_view text);

std::string serialize_placement(const Placement& p, const LogicalCircuit& c);
Placement parse_placement(std::string_view text, const LogicalCircuit& c);

std::string serialize_routing(const RoutingSolution& r, const LogicalCircuit& c);
RoutingSolution parse_routing(std::string_view text, const LogicalCircuit& c);

/// Fixed 3-decimal rendering used by every format.
std::string fmt3(double v);

}  // namespace nepr
