#pragma once

// Stochastic deposition of physical components onto an approximate mesh.

#include <cstdint>

#include "nepr/model.hpp"

namespace nepr {

struct DepositionOptions {
  double rho = 10.0;     // mean pitch, um
  double jitter = 0.3;   // cell-centre displacement, fraction of rho
  bool iid_types = false;  // draw each type independently instead of exact 2x counts
  int max_retries = 64;  // per component, to find a non-overlapping offset
};

class DepositionError : public SemanticError {
 public:
  DepositionError(int cell, const std::string& what) : SemanticError("cell " + std::to_string(cell) + ": " + what), cell_(cell) {}
  int cell() const { return cell_; }

 private:
  int cell_;
};

/// Number of boundary I/O slots for a circuit.
int io_slot_count(const LogicalCircuit& c);

/// 2N components on a ceil(sqrt(2N))^2 mesh in a sqrt(2N)*rho square.
/// Deterministic for a given seed.
PhysicalLayout generate_layout(const LogicalCircuit& c, const DepositionOptions& opt, std::uint64_t seed);

/// `count` points evenly spaced along the boundary, counter-clockwise from the origin.
std::vector<Point> boundary_slots(double width, double height, int count);

}  // namespace nepr
