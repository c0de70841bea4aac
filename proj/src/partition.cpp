#include "nepr/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nepr/rng.hpp"
#include "text.hpp"

namespace nepr {

namespace {
constexpr int kMaxGain = 3;  // a component touches at most three nets
constexpr int kGainLevels = 2 * kMaxGain + 1;
}  // namespace

int PartitionResult::size(int b) const { return static_cast<int>(std::count(block_of.begin(), block_of.end(), b)); }

std::vector<std::vector<int>> PartitionResult::members() const {
  std::vector<std::vector<int>> out(blocks);
  for (int i = 0; i < static_cast<int>(block_of.size()); ++i) out[block_of[i]].push_back(i);
  return out;
}

PartitionResult PartitionResult::single(const LogicalCircuit& c) {
  return {std::vector<int>(c.component_count(), 0), 1, 0.0, {std::string()}};
}

long cut_cost(const LogicalCircuit& c, const PartitionResult& p) {
  long total = 0;
  std::vector<int> seen;
  for (const auto& net : c.nets()) {
    seen.clear();
    for (int pin : net.members) {
      if (c.is_io_pin(pin)) continue;
      int b = p.block_of[c.component_of_pin(pin)];
      if (std::find(seen.begin(), seen.end(), b) == seen.end()) seen.push_back(b);
    }
    if (!seen.empty()) total += static_cast<long>(seen.size()) - 1;
  }
  return total;
}

std::pair<int, int> balance_bounds(int n, int blocks, double tolerance) {
  const double ideal = static_cast<double>(n) / blocks;
  int lo = static_cast<int>(std::floor((1.0 - tolerance) * ideal + 1e-9));
  int hi = static_cast<int>(std::ceil((1.0 + tolerance) * ideal - 1e-9));
  return {std::max(lo, 0), hi};
}

// ---------------------------------------------------------------------------

Hypergraph Hypergraph::from_circuit(const LogicalCircuit& c, const std::vector<int>& comps) {
  Hypergraph h;
  h.vertices = static_cast<int>(comps.size());
  std::vector<int> local(c.component_count(), -1);
  for (int i = 0; i < h.vertices; ++i) local[comps[i]] = i;
  h.nets_of.resize(h.vertices);
  std::map<int, int> mult;
  for (const auto& net : c.nets()) {
    mult.clear();
    for (int pin : net.members) {
      if (c.is_io_pin(pin)) continue;
      int v = local[c.component_of_pin(pin)];
      if (v >= 0) ++mult[v];
    }
    if (mult.size() < 2) continue;
    const int e = static_cast<int>(h.nets.size());
    h.nets.emplace_back(mult.begin(), mult.end());
    for (auto [v, m] : mult) h.nets_of[v].emplace_back(e, m);
  }
  return h;
}

long Hypergraph::cut_cost(const std::vector<int>& block_of) const {
  long total = 0;
  std::vector<int> seen;
  for (const auto& net : nets) {
    seen.clear();
    for (auto [v, m] : net) {
      if (std::find(seen.begin(), seen.end(), block_of[v]) == seen.end()) seen.push_back(block_of[v]);
    }
    total += static_cast<long>(seen.size()) - 1;
  }
  return total;
}

// ---------------------------------------------------------------------------

FmPartitioner::FmPartitioner(const Hypergraph& h, std::vector<int> initial, int blocks, int lo, int hi)
    : h_(h), blocks_(blocks), lo_(lo), hi_(hi), block_(std::move(initial)), size_(blocks, 0) {
  count_.assign(h.nets.size() * blocks, 0);
  for (int v = 0; v < h.vertices; ++v) ++size_[block_[v]];
  for (int e = 0; e < static_cast<int>(h.nets.size()); ++e) {
    for (auto [v, m] : h.nets[e]) count(e, block_[v]) += m;
  }
  cost_ = h.cut_cost(block_);
  const std::size_t nodes = static_cast<std::size_t>(h.vertices) * blocks;
  gain_.assign(nodes, 0);
  next_.assign(nodes, -1);
  prev_.assign(nodes, -1);
  queued_.assign(nodes, 0);
  locked_.assign(h.vertices, 0);
  head_.assign(static_cast<std::size_t>(blocks) * blocks * kGainLevels, -1);
}

int FmPartitioner::gain(int v, int t) const {
  const int from = block_[v];
  if (from == t) return 0;
  int g = 0;
  for (auto [e, m] : h_.nets_of[v]) {
    g += count(e, from) == m;
    g -= count(e, t) == 0;
  }
  return g;
}

void FmPartitioner::apply(int v, int t) {
  const int from = block_[v];
  for (auto [e, m] : h_.nets_of[v]) {
    count(e, from) -= m;
    if (count(e, from) == 0) --cost_;
    if (count(e, t) == 0) ++cost_;
    count(e, t) += m;
  }
  --size_[from];
  ++size_[t];
  block_[v] = t;
}

void FmPartitioner::move(int v, int t) { apply(v, t); }

int FmPartitioner::bucket_of(int node) const {
  const int v = node / blocks_, t = node % blocks_;
  return (block_[v] * blocks_ + t) * kGainLevels + gain_[node] + kMaxGain;
}

void FmPartitioner::insert(int node) {
  int& head = head_[bucket_of(node)];
  prev_[node] = -1;
  next_[node] = head;
  if (head >= 0) prev_[head] = node;
  head = node;
  queued_[node] = 1;
}

void FmPartitioner::erase(int node) {
  if (!queued_[node]) return;
  if (prev_[node] >= 0) {
    next_[prev_[node]] = next_[node];
  } else {
    head_[bucket_of(node)] = next_[node];
  }
  if (next_[node] >= 0) prev_[next_[node]] = prev_[node];
  queued_[node] = 0;
}

void FmPartitioner::refresh(int v) {
  for (int t = 0; t < blocks_; ++t) {
    if (t == block_[v]) continue;
    const int node = v * blocks_ + t;
    const int g = gain(v, t);
    if (g == gain_[node] && queued_[node]) continue;
    erase(node);
    gain_[node] = g;
    insert(node);
  }
}

bool FmPartitioner::pass() {
  const long start = cost_;
  std::fill(head_.begin(), head_.end(), -1);
  std::fill(queued_.begin(), queued_.end(), 0);
  std::fill(locked_.begin(), locked_.end(), 0);
  // Insert in reverse so that list heads favour low vertex ids.
  for (int v = h_.vertices - 1; v >= 0; --v) {
    for (int t = blocks_ - 1; t >= 0; --t) {
      if (t == block_[v]) continue;
      const int node = v * blocks_ + t;
      gain_[node] = gain(v, t);
      insert(node);
    }
  }
  std::vector<std::pair<int, int>> moves;  // (vertex, previous block)
  long best = cost_;
  std::size_t best_len = 0;
  for (;;) {
    int pick = -1;
    for (int g = kMaxGain; g >= -kMaxGain && pick < 0; --g) {
      for (int from = 0; from < blocks_ && pick < 0; ++from) {
        if (size_[from] - 1 < lo_) continue;
        for (int to = 0; to < blocks_; ++to) {
          if (to == from || size_[to] + 1 > hi_) continue;
          int node = head_[(from * blocks_ + to) * kGainLevels + g + kMaxGain];
          if (node >= 0) {
            pick = node;
            break;
          }
        }
      }
    }
    if (pick < 0) break;
    const int v = pick / blocks_, t = pick % blocks_;
    const int from = block_[v];
    for (int u = 0; u < blocks_; ++u) erase(v * blocks_ + u);
    locked_[v] = 1;
    std::vector<std::pair<int, int>> before;
    before.reserve(h_.nets_of[v].size());
    for (auto [e, m] : h_.nets_of[v]) before.emplace_back(count(e, from), count(e, t));
    apply(v, t);
    moves.emplace_back(v, from);
    // Gains only depend on counts up to three, so nets whose touched
    // counts stay above that cannot change any neighbour's gain.
    for (std::size_t k = 0; k < h_.nets_of[v].size(); ++k) {
      const int e = h_.nets_of[v][k].first;
      const int lo_from = std::min(before[k].first, count(e, from));
      const int lo_to = std::min(before[k].second, count(e, t));
      if (lo_from > kMaxGain && lo_to > kMaxGain) continue;
      for (auto [y, m] : h_.nets[e]) {
        if (!locked_[y]) refresh(y);
      }
    }
    if (cost_ < best) {
      best = cost_;
      best_len = moves.size();
    }
  }
  for (std::size_t k = moves.size(); k > best_len; --k) apply(moves[k - 1].first, moves[k - 1].second);
  log_.emplace_back(start, cost_);
  return cost_ < start;
}

int FmPartitioner::run(int max_passes) {
  int passes = 0;
  while (passes < max_passes) {
    ++passes;
    if (!pass()) break;
  }
  return passes;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> fm_subset(const LogicalCircuit& c, const std::vector<int>& comps, int blocks, Rng rng, const FmOptions& opt) {
  const int n = static_cast<int>(comps.size());
  if (blocks < 1 || blocks > n)
    throw PartitionError("cannot split " + std::to_string(n) + " components into " + std::to_string(blocks) + " blocks");
  if (blocks == 1) return std::vector<int>(n, 0);
  auto [lo, hi] = balance_bounds(n, blocks, opt.tolerance);
  if (lo > n / blocks || hi < (n + blocks - 1) / blocks) throw PartitionError("balance constraint is infeasible");
  Hypergraph h = Hypergraph::from_circuit(c, comps);
  std::vector<int> best;
  long best_cost = 0;
  for (int start = 0; start < std::max(1, opt.starts); ++start) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<int> initial(n);
    for (int i = 0; i < n; ++i) initial[order[i]] = i % blocks;
    FmPartitioner fm(h, std::move(initial), blocks, lo, hi);
    fm.run(opt.max_passes);
    if (best.empty() || fm.cost() < best_cost) {
      best_cost = fm.cost();
      best = fm.assignment();
    }
    if (best_cost == 0) break;
  }
  return best;
}

}  // namespace

PartitionResult fm_partition(const LogicalCircuit& c, int blocks, std::uint64_t seed, const FmOptions& opt) {
  std::vector<int> all(c.component_count());
  for (int i = 0; i < c.component_count(); ++i) all[i] = i;
  PartitionResult r;
  r.blocks = blocks;
  r.balance_tolerance = opt.tolerance;
  r.block_of = fm_subset(c, all, blocks, make_stream(seed, 0x9a27), opt);
  r.block_module.assign(blocks, std::string());
  return r;
}

std::vector<int> apportion(const std::vector<int>& sizes, int total) {
  const int groups = static_cast<int>(sizes.size());
  if (total < groups) throw PartitionError("fewer blocks than module groups");
  long sum = 0;
  for (int s : sizes) sum += s;
  std::vector<int> seats(groups);
  std::vector<double> rem(groups);
  int given = 0;
  for (int g = 0; g < groups; ++g) {
    double quota = static_cast<double>(sizes[g]) * total / sum;
    seats[g] = static_cast<int>(std::floor(quota + 1e-9));
    rem[g] = quota - seats[g];
    given += seats[g];
  }
  std::vector<int> order(groups);
  for (int g = 0; g < groups; ++g) order[g] = g;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b] + 1e-9; });
  for (int k = 0; given < total; ++k, ++given) ++seats[order[k % groups]];
  // Every group needs a block; take from the group with the most seats.
  for (int g = 0; g < groups; ++g) {
    if (seats[g] > 0) continue;
    int donor = static_cast<int>(std::max_element(seats.begin(), seats.end()) - seats.begin());
    --seats[donor];
    ++seats[g];
  }
  return seats;
}

PartitionResult semantic_prepartition(const LogicalCircuit& c, int blocks, std::uint64_t seed, const FmOptions& opt,
                                      std::string* warning) {
  const int n = c.component_count();
  std::vector<std::string> tags;
  std::vector<int> group(n, -1);
  int tagged = 0;
  for (const auto& comp : c.components()) {
    if (comp.module.empty()) continue;
    ++tagged;
    auto it = std::find(tags.begin(), tags.end(), comp.module);
    group[comp.id] = static_cast<int>(it - tags.begin());
    if (it == tags.end()) tags.push_back(comp.module);
  }
  if (tagged < 0.9 * n) {
    if (warning)
      *warning = "only " + std::to_string(tagged) + " of " + std::to_string(n) + " components carry module tags; using plain FM";
    return fm_partition(c, blocks, seed, opt);
  }
  // Untagged components join the group they share the most nets with.
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      if (group[i] >= 0) continue;
      std::vector<int> votes(tags.size(), 0);
      for (int e : c.nets_of_component(i)) {
        for (int pin : c.nets()[e].members) {
          if (c.is_io_pin(pin)) continue;
          int g = group[c.component_of_pin(pin)];
          if (g >= 0) ++votes[g];
        }
      }
      auto best = std::max_element(votes.begin(), votes.end());
      if (*best > 0) {
        group[i] = static_cast<int>(best - votes.begin());
        changed = true;
      }
    }
  }
  for (int& g : group)
    if (g < 0) g = 0;

  if (tags.size() == 1) {
    auto r = fm_partition(c, blocks, seed, opt);
    r.block_module.assign(blocks, tags[0]);
    return r;
  }
  std::vector<std::vector<int>> comps(tags.size());
  for (int i = 0; i < n; ++i) comps[group[i]].push_back(i);
  std::vector<int> sizes;
  for (const auto& v : comps) sizes.push_back(static_cast<int>(v.size()));
  auto seats = apportion(sizes, blocks);

  PartitionResult r;
  r.blocks = blocks;
  r.balance_tolerance = opt.tolerance;
  r.block_of.assign(n, -1);
  int base = 0;
  for (std::size_t g = 0; g < tags.size(); ++g) {
    auto local = fm_subset(c, comps[g], seats[g], make_stream(seed, 0x5e00 + g), opt);
    for (std::size_t k = 0; k < local.size(); ++k) r.block_of[comps[g][k]] = base + local[k];
    for (int b = 0; b < seats[g]; ++b) r.block_module.push_back(tags[g]);
    base += seats[g];
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string serialize_partition(const PartitionResult& p) {
  std::string out = "prt 1\n";
  auto members = p.members();
  for (int b = 0; b < p.blocks; ++b) {
    out += "block " + std::to_string(b);
    if (b < static_cast<int>(p.block_module.size()) && !p.block_module[b].empty()) out += " module=" + p.block_module[b];
    out += ":";
    for (int comp : members[b]) out += " c" + std::to_string(comp);
    out += "\n";
  }
  return out;
}

PartitionResult parse_partition(std::string_view doc, const LogicalCircuit& c) {
  auto lines = text::tokenize(doc);
  text::expect_header(lines, "prt", 1);
  PartitionResult p;
  p.blocks = 0;
  p.block_of.assign(c.component_count(), -1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto& t = l.tokens;
    if (t[0] != "block" || t.size() < 2) text::fail(l, "expected 'block <id>[ module=<tag>]: c<id>+'");
    std::size_t k = 1;
    std::string_view id = t[k];
    std::string module;
    bool colon = !id.empty() && id.back() == ':';
    if (colon) id.remove_suffix(1);
    ++k;
    if (!colon && k < t.size() && text::starts_with(t[k], "module=")) {
      std::string_view m = t[k].substr(7);
      if (!m.empty() && m.back() == ':') {
        m.remove_suffix(1);
        colon = true;
      }
      module = std::string(m);
      ++k;
    }
    if (!colon) {
      if (k < t.size() && t[k] == ":") {
        colon = true;
        ++k;
      } else {
        text::fail(l, "missing ':'");
      }
    }
    const int b = text::to_int(l, id);
    if (b != p.blocks) text::fail(l, "block ids must be dense and ordered");
    ++p.blocks;
    p.block_module.push_back(module);
    for (; k < t.size(); ++k) {
      if (!text::starts_with(t[k], "c")) text::fail(l, "expected component reference");
      int comp = text::to_int(l, t[k].substr(1));
      if (comp < 0 || comp >= c.component_count()) text::fail(l, "unknown component");
      if (p.block_of[comp] != -1) text::fail(l, "component in two blocks");
      p.block_of[comp] = b;
    }
  }
  for (int i = 0; i < c.component_count(); ++i)
    if (p.block_of[i] < 0) throw SemanticError("component c" + std::to_string(i) + " is in no block");
  bool any_module = false;
  for (const auto& m : p.block_module) any_module = any_module || !m.empty();
  if (!any_module) p.block_module.assign(p.blocks, std::string());
  return p;
}

}  // namespace nepr
