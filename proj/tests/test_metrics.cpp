#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "nepr/deposition.hpp"
#include "nepr/metrics.hpp"
#include "nepr/pipeline.hpp"

using namespace nepr;
using namespace nepr::testing;

namespace {

const PipelineResult& routed_adder() {
  static const PipelineResult r = [] {
    PipelineConfig cfg;
    cfg.seed = 5;
    return run_pipeline(cfg);
  }();
  return r;
}

DrcReport check(const PipelineResult& r, const RoutingSolution& s) {
  return drc_check(s, r.circuit, r.placement, r.layout, {s.grid, false});
}

// O(n^2) Prim over explicit points, Manhattan.
double prim(const std::vector<Point>& p) {
  if (p.size() < 2) return 0;
  std::vector<double> d(p.size(), std::numeric_limits<double>::infinity());
  std::vector<char> in(p.size(), 0);
  d[0] = 0;
  double total = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    std::size_t u = p.size();
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!in[i] && (u == p.size() || d[i] < d[u])) u = i;
    in[u] = 1;
    total += d[u];
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!in[i]) d[i] = std::min(d[i], std::abs(p[i].x - p[u].x) + std::abs(p[i].y - p[u].y));
  }
  return total;
}

int index_of_wire(const RoutingSolution& s, int net, int nth = 0) {
  for (std::size_t i = 0; i < s.sequence.size(); ++i)
    if (const auto* w = std::get_if<Wire>(&s.sequence[i]); w && w->net == net && nth-- == 0) return static_cast<int>(i);
  return -1;
}

}  // namespace

TEST_CASE("manufacturing time reproduces the worked example") {
  // 1.64M rho-units of wire at rho = 10 um, printed at 1 cm/s.
  const double psi = 1.64e6 * 10.0;
  CHECK(print_time(psi, kDefaultWireSpeed) / 60.0 == doctest::Approx(27.33).epsilon(0.01 / 27.33));

  RtLedger rt;
  rt.place_s = 4.23 * 60;
  const auto r = measure(33.00 * 60 * kDefaultWireSpeed, 0, 10.0, kDefaultWireSpeed, rt);
  CHECK(r.pt / 60 == doctest::Approx(33.00));
  CHECK(std::abs(r.et / 60 - 37.23) < 0.01);
  CHECK_THROWS_AS(print_time(1.0, 0.0), SemanticError);
}

TEST_CASE("measure splits the ledger into shared and per-instance time") {
  RtLedger rt{1, 2, 3, 4};
  CHECK(rt.amortized() == 3);
  CHECK(rt.per_instance() == 7);
  const auto r = measure(1000, 7, 10, 100, rt, 2);
  CHECK(r.psi_r == 100);
  CHECK(r.rt_partition == 3);
  CHECK(r.rt_per_instance == 7);
  CHECK(r.pt == 10);
  CHECK(r.et == 20);
  CHECK(r.failures == 2);
}

TEST_CASE("metrics file round trip") {
  MetricsReport r;
  r.psi = 1904.5;
  r.psi_r = 190.45;
  r.omega = 160;
  r.rt_partition = 0.25;
  r.rt_per_instance = 1.125;
  r.pt = 0.19045;
  r.et = 1.56545;
  r.failures = 3;
  r.source = 0xabcdefULL;
  const auto text = serialize_metrics(r);
  for (const char* key : {"psi_r=", "omega=", "rt_partition_s=", "rt_per_instance_s=", "pt_s=", "et_s=", "failed_nets="})
    CHECK(text.find(key) != std::string::npos);
  const auto back = parse_metrics(text);
  CHECK(back.psi == r.psi);
  CHECK(back.psi_r == r.psi_r);
  CHECK(back.omega == r.omega);
  CHECK(back.et == r.et);
  CHECK(back.failures == r.failures);
  CHECK(back.source == r.source);
  CHECK_THROWS_AS(parse_metrics("psi=1\nbogus=2\n"), ParseError);
  CHECK_THROWS_AS(parse_metrics("psi\n"), ParseError);
}

TEST_CASE("mst lower bound matches an independent Prim") {
  const auto c = full_adder();
  const auto layout = generate_layout(c, {}, 2);
  const auto m = greedy_placement(c, layout);
  double want = 0;
  for (const auto& net : c.nets()) {
    std::vector<Point> pts;
    for (int pin : net.members)
      if (auto p = pin_location(c, layout, m, pin)) pts.push_back(*p);
    want += prim(pts);
  }
  CHECK(mst_lower_bound(c, layout, m) == doctest::Approx(want));
}

TEST_CASE("routed wire length respects the MST bound per solution") {
  const auto& r = routed_adder();
  REQUIRE(r.routing.failures.empty());
  // Stubs are not wire; grid snapping can shave up to one stub per pin.
  double slack = 0;
  for (const auto& st : r.routing.stubs)
    if (auto p = pin_location(r.circuit, r.layout, r.placement, st.pin))
      slack += std::abs(p->x - st.vertex.x) + std::abs(p->y - st.vertex.y);
  CHECK(r.routing.wire_length() + slack >= mst_lower_bound(r.circuit, r.layout, r.placement) * 0.999);
  CHECK(r.metrics.psi == doctest::Approx(r.routing.wire_length()));
  CHECK(r.metrics.omega == r.routing.insulator_count());
}

TEST_CASE("drc accepts a routed solution") {
  const auto& r = routed_adder();
  const auto report = check(r, r.routing);
  for (const auto& v : report.violations) MESSAGE(v.kind << ": " << v.detail);
  CHECK(report.pass());
}

TEST_CASE("drc catches injected faults") {
  const auto& r = routed_adder();
  const RoutingSolution& ok = r.routing;
  REQUIRE(ok.insulator_count() > 0);

  SUBCASE("missing wire disconnects its net") {
    RoutingSolution s = ok;
    s.sequence.erase(s.sequence.begin() + index_of_wire(s, 3));
    CHECK(check(r, s).count("disconnected-net") >= 1);
  }
  SUBCASE("dropping one insulator leaves exactly one uninsulated crossing") {
    RoutingSolution s = ok;
    auto it = std::find_if(s.sequence.begin(), s.sequence.end(),
                           [](const RoutePrimitive& p) { return std::holds_alternative<Insulator>(p); });
    s.sequence.erase(it);
    const auto rep = check(r, s);
    CHECK(rep.count("missing-insulator") == 1);
    CHECK(rep.violations.size() == 1);
  }
  SUBCASE("an insulator printed after both wires is out of order") {
    RoutingSolution s = ok;
    auto it = std::find_if(s.sequence.begin(), s.sequence.end(),
                           [](const RoutePrimitive& p) { return std::holds_alternative<Insulator>(p); });
    auto ins = *it;
    s.sequence.erase(it);
    s.sequence.push_back(ins);
    CHECK(check(r, s).count("print-order") == 1);
  }
  SUBCASE("an extra insulator on bare substrate is stray") {
    RoutingSolution s = ok;
    s.sequence.insert(s.sequence.begin(), Insulator{{0.0, 0.0}});
    CHECK(check(r, s).count("stray-insulator") == 1);
  }
  SUBCASE("reusing another net's edge conflicts") {
    RoutingSolution s = ok;
    Wire w = std::get<Wire>(s.sequence[index_of_wire(s, 3)]);
    w.net = 4;
    s.sequence.push_back(w);
    CHECK(check(r, s).count("edge-conflict") >= 1);
  }
  SUBCASE("off-lattice wire") {
    RoutingSolution s = ok;
    Wire w = std::get<Wire>(s.sequence[index_of_wire(s, 3)]);
    w.a.x += 0.3 * s.grid;
    s.sequence.push_back(w);
    CHECK(check(r, s).count("off-grid") == 1);
  }
  SUBCASE("wire through a component box") {
    RoutingSolution s = ok;
    const auto& pc = r.layout.components[r.placement.comp_map[0]];
    const Rect box = routing_box(pc, s.grid);
    const double g = s.grid;
    const double y = std::ceil((box.y + box.h / 2) / g) * g;
    s.sequence.push_back(Wire{{std::floor(box.x / g) * g - g, y}, {std::ceil((box.x + box.w) / g) * g + g, y}, 5, false});
    CHECK(check(r, s).count("box-intrusion") >= 1);
  }
  SUBCASE("failed nets are exempt from connectivity") {
    RoutingSolution s = ok;
    s.sequence.erase(s.sequence.begin() + index_of_wire(s, 3));
    s.failures.push_back({3, "injected"});
    CHECK(check(r, s).count("disconnected-net") == 0);
  }
}

TEST_CASE("free-form drc on direct connections") {
  const auto& r = routed_adder();
  auto s = direct_connect(r.circuit, r.layout, r.placement, Metric::manhattan);
  CHECK(check(r, s).pass());
  REQUIRE(s.insulator_count() > 0);
  auto it = std::find_if(s.sequence.begin(), s.sequence.end(),
                         [](const RoutePrimitive& p) { return std::holds_alternative<Insulator>(p); });
  s.sequence.erase(it);
  CHECK(check(r, s).count("missing-insulator") >= 1);
}

TEST_CASE("histogram tallies by kind") {
  DrcReport d;
  d.violations = {{"a", ""}, {"b", ""}, {"a", ""}};
  CHECK(d.count("a") == 2);
  CHECK(d.histogram() == std::map<std::string, int>{{"a", 2}, {"b", 1}});
  CHECK_FALSE(d.pass());
}
