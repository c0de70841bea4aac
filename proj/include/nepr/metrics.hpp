#pragma once

// Solution checks, wire/insulator accounting and the print-time model.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nepr/model.hpp"
#include "nepr/route.hpp"

namespace nepr {

/// Print head speed, um/s (1 cm/s).
inline constexpr double kDefaultWireSpeed = 1e4;

/// Wall-clock seconds per stage. Partition and floorplan can be shared by
/// every printed instance; placement and routing are paid per instance.
struct RtLedger {
  double partition_s = 0, floorplan_s = 0, place_s = 0, route_s = 0;

  double amortized() const { return partition_s + floorplan_s; }
  double per_instance() const { return place_s + route_s; }
  double total() const { return amortized() + per_instance(); }
};

struct MetricsReport {
  double psi = 0;    // um
  double psi_r = 0;  // psi / rho
  int omega = 0;
  double rt_partition = 0, rt_per_instance = 0;  // s
  double pt = 0;  // s
  double et = 0;  // s
  int failures = 0;
  std::uint64_t source = 0;  // content hash of the routing measured; 0 if unknown
};

double print_time(double psi, double alpha);
MetricsReport measure(double psi, int omega, double rho, double alpha, const RtLedger& rt, int failures = 0);
MetricsReport measure(const RoutingSolution& s, const PhysicalLayout& layout, double alpha, const RtLedger& rt);

/// Flat `key=value` lines.
std::string serialize_metrics(const MetricsReport& r);
MetricsReport parse_metrics(std::string_view text);

/// Sum over nets of the Manhattan MST of mapped pin positions.
double mst_lower_bound(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m);

struct Violation {
  std::string kind;
  std::string detail;
};

struct DrcReport {
  std::vector<Violation> violations;
  bool pass() const { return violations.empty(); }
  int count(std::string_view kind) const;
  std::map<std::string, int> histogram() const;
};

/// Checks a solution against the circuit and layout. Grid solutions need
/// axis-aligned wires on the g lattice, exclusive edges, insulated
/// perpendicular crossings of at most two nets, clear component boxes and a
/// legal print order. Free-form solutions (grid 0) are checked for
/// connectivity and insulator coverage. Nets listed as failed are skipped
/// for connectivity.
DrcReport drc_check(const RoutingSolution& s, const LogicalCircuit& c, const Placement& m, const PhysicalLayout& layout,
                    const GridOptions& opt = {});

}  // namespace nepr
