#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "nepr/partition.hpp"

using namespace nepr;
using namespace nepr::testing;

namespace {

std::vector<int> iota_vec(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::vector<int> random_balanced(int n, int blocks, Rng& rng) {
  auto order = iota_vec(n);
  rng.shuffle(order);
  std::vector<int> a(n);
  for (int i = 0; i < n; ++i) a[order[i]] = i % blocks;
  return a;
}

/// k-1 cost straight from the circuit, as an independent oracle.
long oracle_cost(const LogicalCircuit& c, const std::vector<int>& block_of) {
  long total = 0;
  for (const auto& net : c.nets()) {
    std::set<int> blocks;
    for (int pin : net.members)
      if (!c.is_io_pin(pin)) blocks.insert(block_of[pin / 3]);
    if (!blocks.empty()) total += static_cast<long>(blocks.size()) - 1;
  }
  return total;
}

LogicalCircuit single_net_clique(int n) {
  std::vector<Kind> kinds(n, Kind::pmos);
  std::vector<std::vector<int>> nets(1);
  for (int p = 0; p < 3 * n; ++p) nets[0].push_back(p);
  return LogicalCircuit("clique", kinds, {}, {}, nets);
}

}  // namespace

TEST_CASE("cut cost examples") {
  // c0..c3 in blocks 0,0,1,2: net 0 spans one block, net 1 two, net 2 three
  std::vector<Kind> kinds(4, Kind::nmos);
  std::vector<std::vector<int>> nets{{0, 3}, {1, 4, 7}, {2, 5, 6, 8, 9, 10, 11}};
  LogicalCircuit c("t", kinds, {}, {}, nets);
  PartitionResult p{{0, 0, 1, 2}, 3, 0.02, {}};
  CHECK(cut_cost(c, p) == 0 + 1 + 2);
  CHECK(cut_cost(c, PartitionResult::single(c)) == 0);
  auto r = random_circuit(50, 5, 2);
  CHECK(cut_cost(r, PartitionResult::single(r)) == 0);
}

TEST_CASE("balance bounds") {
  CHECK(balance_bounds(100, 4, 0.02) == std::pair{24, 26});
  CHECK(balance_bounds(11, 2, 0.02) == std::pair{5, 6});
  CHECK(balance_bounds(10, 2, 0.0) == std::pair{5, 5});
}

TEST_CASE("two disjoint equal halves separate perfectly") {
  auto c = disjoint_union(inverter_chain(20), inverter_chain(20));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = fm_partition(c, 2, seed);
    CHECK(cut_cost(c, p) == 0);
  }
}

TEST_CASE("FM never ends worse than its start and every pass is monotone") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto c = random_circuit(150, 6, seed);
    Hypergraph h = Hypergraph::from_circuit(c, iota_vec(c.component_count()));
    Rng rng(seed);
    for (int B : {2, 3, 5}) {
      auto start = random_balanced(c.component_count(), B, rng);
      const long start_cost = oracle_cost(c, start);
      auto [lo, hi] = balance_bounds(c.component_count(), B, 0.02);
      FmPartitioner fm(h, start, B, lo, hi);
      CHECK(fm.cost() == start_cost);
      fm.run(50);
      CHECK(fm.cost() <= start_cost);
      for (auto [before, after] : fm.pass_log()) CHECK(after <= before);
      CHECK(fm.cost() == oracle_cost(c, fm.assignment()));
      for (int b = 0; b < B; ++b) {
        CHECK(fm.size(b) >= lo);
        CHECK(fm.size(b) <= hi);
      }
    }
  }
}

TEST_CASE("incremental gains match recomputed cut cost exactly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = random_circuit(200, 8, 100 + seed, 6);
    const int n = c.component_count();
    Hypergraph h = Hypergraph::from_circuit(c, iota_vec(n));
    Rng rng(seed);
    const int B = 4;
    FmPartitioner fm(h, random_balanced(n, B, rng), B, 0, n);
    for (int step = 0; step < 2000; ++step) {
      int v = rng.below(n), t = rng.below(B);
      const long before = fm.cost();
      const int g = fm.gain(v, t);
      fm.move(v, t);
      CHECK(fm.cost() == before - g);
      if (step % 100 == 0) CHECK(fm.cost() == oracle_cost(c, fm.assignment()));
    }
    CHECK(fm.cost() == oracle_cost(c, fm.assignment()));
  }
}

TEST_CASE("result is move-local-optimal under balance") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto c = random_circuit(60 + 6 * static_cast<int>(seed), 4, 7 * seed);
    const int n = c.component_count();
    const int B = 2 + static_cast<int>(seed % 3);
    auto p = fm_partition(c, B, seed);
    const long base = oracle_cost(c, p.block_of);
    CHECK(base == cut_cost(c, p));
    auto [lo, hi] = balance_bounds(n, B, 0.02);
    std::vector<int> size(B, 0);
    for (int b : p.block_of) ++size[b];
    for (int v = 0; v < n; ++v) {
      for (int t = 0; t < B; ++t) {
        const int f = p.block_of[v];
        if (t == f || size[f] - 1 < lo || size[t] + 1 > hi) continue;
        auto moved = p.block_of;
        moved[v] = t;
        CHECK(oracle_cost(c, moved) >= base);
      }
    }
  }
}

TEST_CASE("one net over a 33-component clique costs exactly 1") {
  // Enumeration on a smaller instance: every balanced bipartition costs 1.
  auto small = single_net_clique(11);
  auto [lo, hi] = balance_bounds(11, 2, 0.02);
  long best = 1 << 30;
  for (int mask = 0; mask < (1 << 11); ++mask) {
    int ones = __builtin_popcount(mask);
    if (ones < lo || ones > hi || 11 - ones < lo || 11 - ones > hi) continue;
    std::vector<int> a(11);
    for (int i = 0; i < 11; ++i) a[i] = (mask >> i) & 1;
    best = std::min(best, oracle_cost(small, a));
    CHECK(oracle_cost(small, a) == 1);
  }
  CHECK(best == 1);
  auto c = single_net_clique(33);
  CHECK(c.nets()[0].is_large);
  auto p = fm_partition(c, 2, 1);
  CHECK(cut_cost(c, p) == 1);
}

TEST_CASE("fm_partition is deterministic and validates its input") {
  auto c = random_circuit(120, 4, 9);
  CHECK(fm_partition(c, 3, 5) == fm_partition(c, 3, 5));
  CHECK_THROWS_AS(fm_partition(c, 500, 1), PartitionError);
  auto one = fm_partition(c, 1, 1);
  CHECK(cut_cost(c, one) == 0);
}

TEST_CASE("largest-remainder apportionment") {
  CHECK(apportion({30, 10, 10, 25, 25}, 30) == std::vector<int>{9, 3, 3, 8, 7});
  CHECK(apportion({1, 1, 98}, 3) == std::vector<int>{1, 1, 1});
  CHECK(apportion({5, 5}, 7) == std::vector<int>{4, 3});
  CHECK_THROWS_AS(apportion({1, 1, 1}, 2), PartitionError);
  auto s = apportion({17, 4, 9, 33, 2, 11}, 20);
  int sum = 0;
  for (int v : s) sum += v;
  CHECK(sum == 20);
}

TEST_CASE("semantic prepartition keeps modules apart") {
  auto c = expand_gates(two_module_gates());
  auto p = semantic_prepartition(c, 4, 3);
  CHECK(p.blocks == 4);
  REQUIRE(p.block_module.size() == 4);
  for (const auto& comp : c.components()) CHECK(p.block_module[p.block_of[comp.id]] == comp.module);
  std::set<std::string> mods(p.block_module.begin(), p.block_module.end());
  CHECK(mods == std::set<std::string>{"A", "B"});
  // 1320 / 696 split of 4 blocks
  CHECK(std::count(p.block_module.begin(), p.block_module.end(), "A") == 3);
}

TEST_CASE("five module tags give five groups") {
  GateBuilder b("riscv_like");
  std::string s = b.input("in");
  const std::vector<std::string> tags{"IFU+Control", "ALU1", "ALU2", "ALU3", "RegFile"};
  const std::vector<int> gates{15, 5, 5, 12, 13};
  for (std::size_t t = 0; t < tags.size(); ++t) {
    b.set_module(tags[t]);
    for (int i = 0; i < gates[t]; ++i) s = b.gate("INV", {s});
  }
  b.output(s, "out");
  auto c = expand_gates(b.take());
  auto p = semantic_prepartition(c, 10, 1);
  std::vector<std::string> order;
  for (const auto& m : p.block_module)
    if (std::find(order.begin(), order.end(), m) == order.end()) order.push_back(m);
  CHECK(order == tags);
  CHECK(p.blocks == 10);
}

TEST_CASE("single tag matches tag-blind FM; sparse tags fall back") {
  auto chain = inverter_chain(30);
  GateNetlist g;
  {
    GateBuilder b("tagged");
    b.set_module("only");
    std::string s = b.input("in");
    for (int i = 0; i < 30; ++i) s = b.gate("INV", {s});
    b.output(s, "out");
    g = b.take();
  }
  auto tagged = expand_gates(g);
  auto sp = semantic_prepartition(tagged, 3, 4);
  auto fp = fm_partition(tagged, 3, 4);
  CHECK(sp.block_of == fp.block_of);
  CHECK(sp.block_module == std::vector<std::string>(3, "only"));

  std::string warning;
  auto fallback = semantic_prepartition(chain, 3, 4, {}, &warning);
  CHECK_FALSE(warning.empty());
  CHECK(fallback == fm_partition(chain, 3, 4));
}

TEST_CASE("partition format round-trips") {
  auto c = expand_gates(two_module_gates());
  auto p = semantic_prepartition(c, 4, 2);
  auto text = serialize_partition(p);
  auto back = parse_partition(text, c);
  CHECK(back.block_of == p.block_of);
  CHECK(back.block_module == p.block_module);
  CHECK(serialize_partition(back) == text);
  auto q = fm_partition(c, 3, 1);
  CHECK(parse_partition(serialize_partition(q), c).block_of == q.block_of);
  CHECK_THROWS_AS(parse_partition("prt 1\nblock 0: c0\n", c), SemanticError);
}
