#include "nepr/deposition.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nepr/rng.hpp"

namespace nepr {

int io_slot_count(const LogicalCircuit& c) {
  int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(c.component_count())) - 1e-12));
  return std::max(2 * c.io_count(), 4 * side);
}

std::vector<Point> boundary_slots(double width, double height, int count) {
  std::vector<Point> out;
  const double perimeter = 2.0 * (width + height);
  for (int k = 0; k < count; ++k) {
    double s = (k + 0.5) * perimeter / count;
    Point p;
    if (s < width) {
      p = {quantize(s), 0.0};
    } else if (s < width + height) {
      p = {width, quantize(s - width)};
    } else if (s < 2 * width + height) {
      p = {quantize(2 * width + height - s), height};
    } else {
      p = {0.0, quantize(perimeter - s)};
    }
    out.push_back(p);
  }
  return out;
}

namespace {

bool boxes_overlap(const Rect& a, const Rect& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

}  // namespace

PhysicalLayout generate_layout(const LogicalCircuit& c, const DepositionOptions& opt, std::uint64_t seed) {
  if (!(opt.rho > 0)) throw SemanticError("rho must be positive");
  if (!(opt.jitter >= 0 && opt.jitter < 1)) throw SemanticError("jitter must lie in [0, 1)");
  const int n_phys = 2 * c.component_count();
  const int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_phys)) - 1e-12));
  PhysicalLayout layout;
  layout.rho = opt.rho;
  layout.width = layout.height = quantize(std::sqrt(static_cast<double>(n_phys)) * opt.rho);
  const double pitch = layout.width / m;

  Rng cells_rng = make_stream(seed, 1);
  Rng types_rng = make_stream(seed, 2);
  Rng jitter_rng = make_stream(seed, 3);

  std::vector<int> cells(m * m);
  for (int i = 0; i < m * m; ++i) cells[i] = i;
  cells_rng.shuffle(cells);
  cells.resize(n_phys);
  std::sort(cells.begin(), cells.end());

  std::vector<Kind> kinds;
  if (opt.iid_types) {
    const double p_pmos = static_cast<double>(c.count(Kind::pmos)) / c.component_count();
    for (int i = 0; i < n_phys; ++i) kinds.push_back(types_rng.uniform() < p_pmos ? Kind::pmos : Kind::nmos);
  } else {
    kinds.assign(2 * c.count(Kind::pmos), Kind::pmos);
    kinds.resize(n_phys, Kind::nmos);
    types_rng.shuffle(kinds);
  }

  // Spatial hash by mesh cell; only neighbouring cells can touch.
  std::map<int, int> by_cell;
  std::vector<Rect> boxes;
  const double amp = opt.jitter * opt.rho / 2.0;
  for (int i = 0; i < n_phys; ++i) {
    const int cell = cells[i];
    const int cx = cell % m, cy = cell / m;
    PhysicalComponent comp{i, kinds[i], {}, 0.0};
    comp.theta = quantize(jitter_rng.uniform(0.0, 2.0 * kPi), 1e-6);
    if (comp.theta >= 2.0 * kPi) comp.theta = 0.0;
    bool placed = false;
    for (int attempt = 0; attempt <= opt.max_retries && !placed; ++attempt) {
      double dx = amp > 0 ? jitter_rng.uniform(-amp, amp) : 0.0;
      double dy = amp > 0 ? jitter_rng.uniform(-amp, amp) : 0.0;
      comp.center = {(cx + 0.5) * pitch + dx, (cy + 0.5) * pitch + dy};
      Rect probe = body_box(comp);
      // keep the whole body, and so every pin, strictly inside
      const double margin = 1e-3;
      comp.center.x = std::clamp(comp.center.x, probe.w / 2 + margin, layout.width - probe.w / 2 - margin);
      comp.center.y = std::clamp(comp.center.y, probe.h / 2 + margin, layout.height - probe.h / 2 - margin);
      comp.center = {quantize(comp.center.x), quantize(comp.center.y)};
      Rect box = body_box(comp);
      placed = true;
      for (int ny = cy - 1; ny <= cy + 1 && placed; ++ny) {
        for (int nx = cx - 1; nx <= cx + 1 && placed; ++nx) {
          if (nx < 0 || ny < 0 || nx >= m || ny >= m) continue;
          auto it = by_cell.find(ny * m + nx);
          if (it != by_cell.end() && boxes_overlap(box, boxes[it->second])) placed = false;
        }
      }
      if (placed) {
        by_cell[cell] = i;
        boxes.push_back(box);
      }
    }
    if (!placed) throw DepositionError(cell, "no non-overlapping position after " + std::to_string(opt.max_retries) + " retries");
    layout.components.push_back(comp);
  }
  layout.io_slots = boundary_slots(layout.width, layout.height, io_slot_count(c));
  return layout;
}

}  // namespace nepr
