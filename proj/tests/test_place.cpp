#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "nepr/deposition.hpp"
#include "nepr/place.hpp"

using namespace nepr;
using namespace nepr::testing;

namespace {

/// One parked component plus io pins on the given nets; io pins are placed on slots.
struct IoOnly {
  LogicalCircuit c;
  PhysicalLayout layout;
  Placement m;
};

IoOnly io_net(const std::vector<Point>& slots) {
  std::vector<std::string> names;
  std::vector<int> net;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    names.push_back("p" + std::to_string(i));
    net.push_back(3 + static_cast<int>(i));
  }
  IoOnly r{LogicalCircuit("io", {Kind::pmos}, {}, names, {{0, 1, 2}, net}), {}, {}};
  r.layout.width = r.layout.height = 5;
  r.layout.rho = 1;
  r.layout.components.push_back({0, Kind::pmos, {2.5, 2.5}, 0.0});
  r.layout.io_slots = slots;
  r.m = Placement::empty_for(r.c);
  for (std::size_t i = 0; i < slots.size(); ++i) r.m.io_map[i] = static_cast<int>(i);
  return r;
}

/// Brute-force spanning trees over three points.
double three_point_mst(Point a, Point b, Point c) {
  double ab = manhattan(a, b), bc = manhattan(b, c), ac = manhattan(a, c);
  return std::min({ab + bc, ab + ac, bc + ac});
}

BlockProblem whole_problem(const LogicalCircuit& c, const PhysicalLayout& l) {
  BlockProblem pb;
  for (int i = 0; i < c.component_count(); ++i) pb.comps.push_back(i);
  for (int i = 0; i < c.io_count(); ++i) pb.ios.push_back(i);
  for (int i = 0; i < static_cast<int>(l.components.size()); ++i) pb.phys.push_back(i);
  for (int i = 0; i < static_cast<int>(l.io_slots.size()); ++i) pb.slots.push_back(i);
  pb.d_max = l.substrate().diagonal();
  return pb;
}

void check_injective(const BlockPlacer& bp, const LogicalCircuit& c, const PhysicalLayout& l) {
  std::set<int> used(bp.comp_assignment().begin(), bp.comp_assignment().end());
  CHECK(used.size() == bp.comp_assignment().size());
  std::set<int> slots(bp.io_assignment().begin(), bp.io_assignment().end());
  CHECK(slots.size() == bp.io_assignment().size());
  for (std::size_t i = 0; i < bp.comp_assignment().size(); ++i) {
    const int logical = bp.problem().comps[i];
    const int phys = bp.problem().phys[bp.comp_assignment()[i]];
    CHECK(c.components()[logical].kind == l.components[phys].kind);
  }
}

}  // namespace

TEST_CASE("placement cost of small nets") {
  auto two = io_net({{0, 0}, {3, 4}});
  CHECK(placement_cost(two.c, two.layout, two.m) == doctest::Approx(7.0));
  auto r = io_net({{0, 0}, {5, 4}});
  CHECK(placement_cost(r.c, r.layout, r.m) == doctest::Approx(9.0));
  auto t = io_net({{0, 0}, {0, 5}, {5, 0}});
  CHECK(placement_cost(t.c, t.layout, t.m) == doctest::Approx(three_point_mst({0, 0}, {0, 5}, {5, 0})));
  CHECK(three_point_mst({0, 0}, {0, 5}, {5, 0}) == 10.0);
  // virtual pins join the net they belong to
  std::vector<VirtualPin> vp{{1, 0, {5, 0}}};
  CHECK(placement_cost(r.c, r.layout, r.m, vp) == doctest::Approx(mst_length(std::vector<Point>{{0, 0}, {5, 4}, {5, 0}})));
}

TEST_CASE("nets of 32 pins or more are left out of the cost") {
  std::vector<std::vector<int>> nets(1);
  for (int p = 0; p < 33; ++p) nets[0].push_back(p);
  LogicalCircuit c("big", std::vector<Kind>(11, Kind::nmos), {}, {}, nets);
  REQUIRE(c.nets()[0].is_large);
  DepositionOptions opt;
  auto l = generate_layout(c, opt, 1);
  BlockPlacer bp(c, l, whole_problem(c, l));
  Rng rng(1);
  bp.randomize(rng);
  CHECK(bp.cost() == 0.0);
  Placement m = Placement::empty_for(c);
  bp.write_to(m);
  CHECK(placement_cost(c, l, m) == 0.0);
}

TEST_CASE("schedule: exact budget, ln-linear neighbour distance") {
  auto s = SASchedule::make(50.0, 1000, 80.0, 10.0);
  CHECK(s.epsilon == doctest::Approx(0.05));
  CHECK(s.temperature(1000) == doctest::Approx(s.epsilon).epsilon(1e-9));
  for (long i = 1; i <= 1000; ++i) CHECK(s.temperature(i) < s.temperature(i - 1));
  CHECK(s.neighbor_distance(50.0) == doctest::Approx(80.0));
  CHECK(s.neighbor_distance(s.epsilon) == doctest::Approx(10.0));
  const double mid = std::exp((std::log(50.0) + std::log(0.05)) / 2);
  CHECK(s.neighbor_distance(mid) == doctest::Approx(45.0));
  CHECK(s.neighbor_distance(1e-9) == doctest::Approx(10.0));
}

TEST_CASE("moves keep the mapping injective and type-matched") {
  auto c = random_circuit(80, 6, 3);
  auto l = generate_layout(c, {}, 3);
  BlockPlacer bp(c, l, whole_problem(c, l));
  Rng rng(4);
  bp.randomize(rng);
  int relocations = 0, swaps = 0;
  for (int step = 0; step < 3000; ++step) {
    const double d = 1.0 + rng.uniform() * 60.0;
    Move m = bp.propose(rng, d);
    auto before_c = bp.comp_assignment();
    auto before_i = bp.io_assignment();
    const double predicted = bp.delta(m);
    CHECK(bp.comp_assignment() == before_c);  // delta leaves no trace
    const double old_cost = bp.cost();
    bp.apply(m);
    CHECK(bp.cost() == doctest::Approx(old_cost + predicted));
    int changed = 0;
    for (std::size_t i = 0; i < before_c.size(); ++i) changed += before_c[i] != bp.comp_assignment()[i];
    for (std::size_t i = 0; i < before_i.size(); ++i) changed += before_i[i] != bp.io_assignment()[i];
    if (m.b < 0 && changed > 0) {
      CHECK(changed == 1);
      ++relocations;
    } else if (m.b >= 0) {
      CHECK(changed == 2);
      ++swaps;
    }
    if (step % 250 == 0) check_injective(bp, c, l);
  }
  check_injective(bp, c, l);
  CHECK(bp.cost() == doctest::Approx(bp.full_cost()).epsilon(1e-9));
  CHECK(relocations > 0);
  CHECK(swaps > 0);
}

TEST_CASE("tiny neighbour distance falls back to the nearest same-type component") {
  auto c = random_circuit(40, 2, 8);
  auto l = generate_layout(c, {}, 8);
  auto pb = whole_problem(c, l);
  BlockPlacer bp(c, l, pb);
  for (int j = 0; j < static_cast<int>(pb.phys.size()); ++j) {
    const auto& a = l.components[pb.phys[j]];
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(pb.phys.size()); ++k) {
      const auto& b = l.components[pb.phys[k]];
      if (k == j || b.kind != a.kind) continue;
      double d = euclidean(pin_positions(a)[0], pin_positions(b)[0]);
      if (d < bd) bd = d, best = k;
    }
    CHECK(bp.nearest_same_type(j) == best);
    CHECK(bp.neighbors_within(j, 1e-3).empty());
  }
  Rng rng(2);
  bp.randomize(rng);
  for (int step = 0; step < 200; ++step) {
    Move m = bp.propose(rng, 1e-3);
    if (m.io) continue;
    CHECK(m.target == bp.nearest_same_type(bp.comp_assignment()[m.a]));
  }
}

TEST_CASE("neighbour queries agree with a linear scan") {
  auto c = random_circuit(150, 2, 12);
  auto l = generate_layout(c, {}, 12);
  auto pb = whole_problem(c, l);
  BlockPlacer bp(c, l, pb);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int j = rng.below(static_cast<int>(pb.phys.size()));
    const double d = rng.uniform() * 50;
    std::vector<int> want;
    for (int k = 0; k < static_cast<int>(pb.phys.size()); ++k) {
      if (k == j || l.components[pb.phys[k]].kind != l.components[pb.phys[j]].kind) continue;
      if (euclidean(pin_positions(l.components[pb.phys[k]])[0], pin_positions(l.components[pb.phys[j]])[0]) <= d) want.push_back(k);
    }
    CHECK(bp.neighbors_within(j, d) == want);
  }
}

TEST_CASE("one-component block finds the best same-type component") {
  // Six pMOS and six nMOS packed well inside one pitch, so every move is in
  // range; both anchors sit at the origin so candidate costs differ clearly.
  std::vector<std::vector<int>> nets{{0, 3}, {1, 2, 4}};
  LogicalCircuit c("one", {Kind::pmos}, {}, {"a", "b"}, nets);
  PhysicalLayout l;
  l.width = l.height = 20;
  l.rho = 10;
  Rng geo(9);
  for (int i = 0; i < 12; ++i)
    l.components.push_back({i, i % 2 ? Kind::nmos : Kind::pmos, {8.0 + (i % 4), 8.0 + (i / 4) * 1.5}, geo.uniform() * 6.28});
  BlockProblem pb;
  pb.comps = {0};
  for (int i = 0; i < 12; ++i) pb.phys.push_back(i);
  pb.d_max = 5;
  pb.vpins = {{0, {0.0, 0.0}}, {1, {0.0, 0.0}}};
  std::vector<VirtualPin> vp{{0, 0, {0.0, 0.0}}, {1, 0, {0.0, 0.0}}};
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 12; k += 2) {
    Placement m = Placement::empty_for(c);
    m.comp_map[0] = k;
    best = std::min(best, placement_cost(c, l, m, vp));
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    BlockPlacer bp(c, l, pb);
    PlaceOptions opt;
    opt.iterations = 500;
    auto st = place_sa(bp, opt, Rng(seed));
    CHECK(st.final_cost == doctest::Approx(best));
    Placement m = Placement::empty_for(c);
    bp.write_to(m);
    CHECK(placement_cost(c, l, m, vp) == doctest::Approx(best));
  }
}

TEST_CASE("ten-component block lands within 5% of the exhaustive optimum") {
  // Two-point nets only, so partial sums bound the optimum from below.
  const int n = 10;
  std::vector<Kind> kinds;
  for (int i = 0; i < n; ++i) kinds.push_back(i % 2 ? Kind::nmos : Kind::pmos);
  std::vector<std::string> ios;
  std::vector<std::vector<int>> nets;
  for (int i = 0; i + 1 < n; ++i) nets.push_back({3 * i + 2, 3 * (i + 1) + 1});  // drain_i - source_{i+1}
  int io = 0;
  auto anchor = [&](int pin) {
    ios.push_back("v" + std::to_string(io));
    nets.push_back({pin, 3 * n + io});
    ++io;
  };
  for (int i = 0; i < n; ++i) anchor(3 * i);  // each gate to a fixed virtual pin
  anchor(1);
  anchor(3 * (n - 1) + 2);
  LogicalCircuit c("ten", kinds, {}, ios, nets);

  PhysicalLayout l;
  l.width = l.height = 60;
  l.rho = 10;
  Rng geo(21);
  for (int i = 0; i < 20; ++i) {
    Point p{5 + (i % 5) * 12.5 + geo.uniform() * 2, 5 + (i / 5) * 16 + geo.uniform() * 2};
    l.components.push_back({i, i % 2 ? Kind::nmos : Kind::pmos, p, geo.uniform() * 6.28});
  }
  BlockProblem pb;
  for (int i = 0; i < n; ++i) pb.comps.push_back(i);
  for (int i = 0; i < 20; ++i) pb.phys.push_back(i);
  pb.d_max = l.substrate().diagonal();
  std::vector<VirtualPin> vp;
  for (int k = 0; k < io; ++k) {
    const int net = c.net_of_pin(c.io_pin(k));
    Point at{geo.uniform() * 60, geo.uniform() * 60};
    pb.vpins[net] = at;
    vp.push_back({net, 0, at});
  }

  // Branch and bound in component order over same-type physical choices.
  std::vector<std::array<Point, 3>> pins;
  for (const auto& pc : l.components) pins.push_back(pin_positions(pc));
  std::vector<int> pick(n, -1);
  std::vector<char> used(20, 0);
  double best = std::numeric_limits<double>::infinity();
  auto local = [&](int i) {
    // Nets completed when component i is assigned: its anchors and the link to i-1.
    double s = manhattan(pins[pick[i]][0], pb.vpins[c.net_of_pin(3 * i)]);
    if (i > 0) s += manhattan(pins[pick[i - 1]][2], pins[pick[i]][1]);
    if (i == 0) s += manhattan(pins[pick[0]][1], pb.vpins[c.net_of_pin(1)]);
    if (i == n - 1) s += manhattan(pins[pick[i]][2], pb.vpins[c.net_of_pin(3 * (n - 1) + 2)]);
    return s;
  };
  std::function<void(int, double)> search = [&](int i, double acc) {
    if (acc >= best) return;
    if (i == n) {
      best = acc;
      return;
    }
    for (int k = 0; k < 20; ++k) {
      if (used[k] || l.components[k].kind != kinds[i]) continue;
      used[k] = 1;
      pick[i] = k;
      search(i + 1, acc + local(i));
      used[k] = 0;
    }
  };
  search(0, 0.0);

  BlockPlacer bp(c, l, pb);
  PlaceOptions opt;
  opt.iterations = 1000000;
  auto st = place_sa(bp, opt, Rng(3));
  Placement m = Placement::empty_for(c);
  bp.write_to(m);
  const double got = placement_cost(c, l, m, vp);
  CHECK(got == doctest::Approx(st.final_cost));
  CHECK(got >= best - 1e-9);
  CHECK(got <= 1.05 * best);
}

TEST_CASE("incremental cost matches full recomputation throughout a run") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto c = random_circuit(120 + 20 * static_cast<int>(seed), 8, seed);
    auto l = generate_layout(c, {}, seed);
    BlockPlacer bp(c, l, whole_problem(c, l));
    PlaceOptions opt;
    opt.audit_every = 1;
    auto st = place_sa(bp, opt, Rng(seed));
    CHECK(st.max_audit_error < 1e-9);
    CHECK(st.iterations == static_cast<long>(c.component_count()) * c.component_count());
    CHECK(st.final_cost < st.initial_cost);
    Placement m = Placement::empty_for(c);
    bp.write_to(m);
    CHECK_NOTHROW(validate_placement(m, c, l));
    CHECK(placement_cost(c, l, m) == doctest::Approx(st.final_cost).epsilon(1e-9));
  }
}

TEST_CASE("virtual pins for two and three blocks") {
  // c0, c1, c2 in blocks 0 (A), 1 (B), 2 (C), collinear with B in the middle.
  std::vector<std::vector<int>> nets{{0, 3, 6}, {1, 4}, {2, 5, 7, 8}};
  LogicalCircuit c("vp", {Kind::pmos, Kind::nmos, Kind::pmos}, {}, {}, nets);
  PartitionResult p{{0, 1, 2}, 3, 0.02, {}};
  Floorplan fp{90, 30, {{0, 0, 30, 30}, {30, 0, 30, 30}, {60, 0, 30, 30}}, SlicingTree::from_polish("0 1 V 2 V")};
  auto vps = compute_virtual_pins(c, p, fp);
  auto at = [&](int net, int block) {
    int hits = 0;
    Point found;
    for (const auto& v : vps)
      if (v.net == net && v.block == block) ++hits, found = v.position;
    REQUIRE(hits == 1);
    return found;
  };
  // two blocks: each sees the other's centre
  CHECK(at(1, 0) == Point{45, 15});
  CHECK(at(1, 1) == Point{15, 15});
  // three blocks: the tree is A-B-C; A is the root and takes its nearest child B
  CHECK(at(0, 0) == Point{45, 15});
  CHECK(at(0, 1) == Point{15, 15});
  CHECK(at(0, 2) == Point{45, 15});
  // net 2 spans blocks 0, 1 and 2 too
  CHECK(vps.size() == 2 + 3 + 3);
  // one block only: no virtual pins
  CHECK(compute_virtual_pins(c, PartitionResult{{0, 0, 0}, 3, 0.02, {}}, fp).empty());
}

TEST_CASE("block problems split the substrate") {
  auto c = random_circuit(300, 10, 6);
  auto l = generate_layout(c, {}, 6);
  auto p = fm_partition(c, 4, 6);
  auto fp = floorplan_sa(c, p, l, 6);
  auto blocks = make_block_problems(c, l, p, fp, true);
  REQUIRE(blocks.size() == 4);
  std::size_t phys = 0, slots = 0, comps = 0, ios = 0;
  for (const auto& b : blocks) {
    phys += b.phys.size();
    slots += b.slots.size();
    comps += b.comps.size();
    ios += b.ios.size();
    CHECK(b.ios.size() <= b.slots.size());
    for (int k : b.phys) CHECK(fp.rects[b.block].contains(l.components[k].center));
    CHECK_FALSE(b.vpins.empty());
    CHECK(b.d_max == doctest::Approx(fp.rects[b.block].diagonal()));
  }
  CHECK(phys == l.components.size());
  CHECK(slots == l.io_slots.size());
  CHECK(comps == static_cast<std::size_t>(c.component_count()));
  CHECK(ios == static_cast<std::size_t>(c.io_count()));
  for (const auto& b : make_block_problems(c, l, p, fp, false)) CHECK(b.vpins.empty());
}

TEST_CASE("parallel block placement is independent of the worker count") {
  auto c = random_circuit(240, 8, 7);
  auto l = generate_layout(c, {}, 7);
  auto p = fm_partition(c, 4, 7);
  auto fp = floorplan_sa(c, p, l, 7);
  auto blocks = make_block_problems(c, l, p, fp, true);
  std::vector<PlaceStats> st;
  auto one = place_blocks(c, l, blocks, {}, 11, 1, &st);
  auto four = place_blocks(c, l, blocks, {}, 11, 4);
  CHECK(one == four);
  CHECK(one.is_total());
  CHECK_NOTHROW(validate_placement(one, c, l));
  REQUIRE(st.size() == 4);
  for (std::size_t b = 0; b < 4; ++b) {
    const long nb = static_cast<long>(blocks[b].comps.size());
    CHECK(st[b].iterations == nb * nb);
    CHECK(st[b].final_cost <= st[b].initial_cost);
  }
  CHECK(place_blocks(c, l, blocks, {}, 12, 1) != one);
}

TEST_CASE("virtual pins pull inter-block pins towards their partner blocks") {
  int wins = 0, trials = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto c = random_circuit(200, 6, 40 + seed);
    auto l = generate_layout(c, {}, seed);
    auto p = fm_partition(c, 4, seed);
    auto fp = floorplan_sa(c, p, l, seed);
    auto with = make_block_problems(c, l, p, fp, true);
    auto without = make_block_problems(c, l, p, fp, false);
    auto mw = place_blocks(c, l, with, {}, seed, 1);
    auto mo = place_blocks(c, l, without, {}, seed, 1);
    auto mean_gap = [&](const Placement& m) {
      double sum = 0;
      int count = 0;
      for (const auto& b : with) {
        for (const auto& [net, at] : b.vpins) {
          for (int pin : c.nets()[net].members) {
            if (c.is_io_pin(pin) || p.block_of[c.component_of_pin(pin)] != b.block) continue;
            sum += manhattan(*pin_location(c, l, m, pin), at);
            ++count;
          }
        }
      }
      return sum / count;
    };
    ++trials;
    wins += mean_gap(mw) <= mean_gap(mo);
  }
  CHECK(wins >= 9 * trials / 10);
}

TEST_CASE("too few components of a type is an error") {
  auto c = inverter_chain(4);
  PhysicalLayout l;
  l.width = l.height = 20;
  l.rho = 5;
  for (int i = 0; i < 6; ++i) l.components.push_back({i, Kind::pmos, {3.0 + 3 * i, 10.0}, 0.0});
  l.io_slots = {{0, 5}, {0, 10}, {0, 15}, {20, 5}, {20, 10}};
  BlockPlacer bp(c, l, whole_problem(c, l));
  Rng rng(1);
  CHECK_THROWS_AS(bp.randomize(rng), SemanticError);
}
