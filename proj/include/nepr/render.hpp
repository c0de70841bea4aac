#pragma once

// SVG view of a layout, its placement and routing.

#include <string>

#include "nepr/floorplan.hpp"
#include "nepr/model.hpp"

namespace nepr {

struct RenderOptions {
  const Floorplan* floorplan = nullptr;  // block rectangles, when given
  double px_per_um = 4.0;
};

/// One `<g id="net-N">` per net with wires or stubs, insulators as circles
/// under `<g id="insulators">`. Components unused by the placement are dimmed.
std::string render_svg(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m,
                       const RoutingSolution& s, const RenderOptions& opt = {});

}  // namespace nepr
