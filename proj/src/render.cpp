#include "nepr/render.hpp"

#include <cstdio>
#include <vector>

namespace nepr {

namespace {

std::string n(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_svg(const LogicalCircuit& c, const PhysicalLayout& layout, const Placement& m,
                       const RoutingSolution& s, const RenderOptions& opt) {
  const double k = opt.px_per_um;
  // SVG y grows downwards; flip so the substrate origin sits bottom-left.
  auto X = [&](double x) { return n(x * k); };
  auto Y = [&](double y) { return n((layout.height - y) * k); };
  auto rect = [&](const Rect& r, const std::string& attrs) {
    return "<rect x=\"" + X(r.x) + "\" y=\"" + Y(r.y + r.h) + "\" width=\"" + n(r.w * k) + "\" height=\"" +
           n(r.h * k) + "\" " + attrs + "/>\n";
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + n(layout.width * k) + "\" height=\"" +
         n(layout.height * k) + "\" viewBox=\"0 0 " + n(layout.width * k) + " " + n(layout.height * k) + "\">\n";
  out += rect(layout.substrate(), "id=\"substrate\" fill=\"#f4f1ea\" stroke=\"#444\"");

  if (opt.floorplan) {
    out += "<g id=\"floorplan\" fill=\"none\" stroke=\"orange\" stroke-width=\"2\">\n";
    for (std::size_t b = 0; b < opt.floorplan->rects.size(); ++b)
      out += rect(opt.floorplan->rects[b], "class=\"block\" data-block=\"" + std::to_string(b) + "\"");
    out += "</g>\n";
  }

  std::vector<char> used(layout.components.size(), 0);
  for (int p : m.comp_map)
    if (p >= 0) used[p] = 1;
  out += "<g id=\"components\">\n";
  for (const auto& pc : layout.components) {
    const bool on = used[pc.id];
    const auto pins = pin_positions(pc);
    out += rect(body_box(pc), std::string("class=\"component") + (on ? "" : " unused") +
                                  "\" fill=\"none\" stroke=\"green\"" + (on ? "" : " opacity=\"0.25\""));
    out += "<line x1=\"" + X(pins[2].x) + "\" y1=\"" + Y(pins[2].y) + "\" x2=\"" + X(pins[1].x) + "\" y2=\"" +
           Y(pins[1].y) + "\" stroke=\"" + (pc.kind == Kind::pmos ? "#3060c0" : "#303030") + "\" stroke-width=\"" +
           n(0.2 * k) + "\"" + (on ? "" : " opacity=\"0.25\"") + "/>\n";
  }
  for (const auto& io : layout.io_slots)
    out += "<circle class=\"io\" cx=\"" + X(io.x) + "\" cy=\"" + Y(io.y) + "\" r=\"" + n(0.5 * k) + "\" fill=\"#888\"/>\n";
  out += "</g>\n";

  std::vector<std::vector<const Wire*>> by_net(c.net_count());
  std::vector<std::vector<const PinStub*>> stubs(c.net_count());
  for (const auto& st : s.stubs) stubs[c.net_of_pin(st.pin)].push_back(&st);
  std::vector<Point> insulators;
  for (const auto& p : s.sequence) {
    if (const auto* w = std::get_if<Wire>(&p)) {
      if (w->net >= 0 && w->net < c.net_count()) by_net[w->net].push_back(w);
    } else {
      insulators.push_back(std::get<Insulator>(p).p);
    }
  }
  out += "<g id=\"wires\" stroke-width=\"" + n(0.1 * k) + "\" stroke-linecap=\"square\">\n";
  for (int net = 0; net < c.net_count(); ++net) {
    if (by_net[net].empty() && stubs[net].empty()) continue;
    out += "<g id=\"net-" + std::to_string(net) + "\">\n";
    for (const Wire* w : by_net[net])
      out += "<line x1=\"" + X(w->a.x) + "\" y1=\"" + Y(w->a.y) + "\" x2=\"" + X(w->b.x) + "\" y2=\"" + Y(w->b.y) +
             "\" stroke=\"" + (w->inter_block ? "red" : "purple") + "\"/>\n";
    for (const PinStub* st : stubs[net])
      if (auto at = pin_location(c, layout, m, st->pin))
        out += "<line class=\"stub\" x1=\"" + X(at->x) + "\" y1=\"" + Y(at->y) + "\" x2=\"" + X(st->vertex.x) +
               "\" y2=\"" + Y(st->vertex.y) + "\" stroke=\"purple\"/>\n";
    out += "</g>\n";
  }
  out += "</g>\n";

  out += "<g id=\"insulators\" fill=\"red\">\n";
  for (const auto& p : insulators)
    out += "<circle class=\"insulator\" cx=\"" + X(p.x) + "\" cy=\"" + Y(p.y) + "\" r=\"" + n(0.15 * k) + "\"/>\n";
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace nepr
