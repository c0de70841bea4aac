#pragma once

// Multi-way Fiduccia-Mattheyses partitioning under the (k-1) net cost.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nepr/model.hpp"

namespace nepr {

struct PartitionResult {
  std::vector<int> block_of;  // logical component -> block
  int blocks = 1;
  double balance_tolerance = 0.02;
  std::vector<std::string> block_module;  // parent module per block; empty strings when tag-blind

  int size(int b) const;
  std::vector<std::vector<int>> members() const;

  static PartitionResult single(const LogicalCircuit& c);
  friend bool operator==(const PartitionResult&, const PartitionResult&) = default;
};

/// Sum over nets of (blocks spanned - 1). I/O pins span no block.
long cut_cost(const LogicalCircuit& c, const PartitionResult& p);

class PartitionError : public SemanticError {
 public:
  using SemanticError::SemanticError;
};

/// Inclusive block-size bounds floor((1-tol)n/B) .. ceil((1+tol)n/B).
std::pair<int, int> balance_bounds(int n, int blocks, double tolerance);

/// Nets as (vertex, pin multiplicity) lists over vertices 0..n-1.
struct Hypergraph {
  int vertices = 0;
  std::vector<std::vector<std::pair<int, int>>> nets;
  std::vector<std::vector<std::pair<int, int>>> nets_of;  // vertex -> (net, multiplicity)

  /// Restriction of the circuit to `comps` (vertex i is comps[i]); pins outside are dropped.
  static Hypergraph from_circuit(const LogicalCircuit& c, const std::vector<int>& comps);
  long cut_cost(const std::vector<int>& block_of) const;
};

/// Gain-bucket FM refinement with per-pass locking and best-prefix rollback.
class FmPartitioner {
 public:
  FmPartitioner(const Hypergraph& h, std::vector<int> initial, int blocks, int lo, int hi);

  /// Cut cost change (negated) of moving v into block t.
  int gain(int v, int t) const;
  void move(int v, int t);
  /// Cost maintained incrementally from move gains.
  long cost() const { return cost_; }
  /// One FM pass; returns true if it strictly improved the cost.
  bool pass();
  /// Passes until one fails to improve; returns the number of passes run.
  int run(int max_passes);

  const std::vector<int>& assignment() const { return block_; }
  int size(int b) const { return size_[b]; }
  /// Cost at the start of each completed pass and after it, for auditing.
  const std::vector<std::pair<long, long>>& pass_log() const { return log_; }

 private:
  int count(int e, int b) const { return count_[static_cast<std::size_t>(e) * blocks_ + b]; }
  int& count(int e, int b) { return count_[static_cast<std::size_t>(e) * blocks_ + b]; }
  void apply(int v, int t);
  int bucket_of(int node) const;
  void insert(int node);
  void erase(int node);
  void refresh(int v);


  const Hypergraph& h_;
  int blocks_;
  int lo_, hi_;
  std::vector<int> block_;
  std::vector<int> size_;
  std::vector<int> count_;
  long cost_ = 0;
  std::vector<std::pair<long, long>> log_;
  // Gain buckets: node v*B+t sits in list (block(v), t, gain).
  std::vector<int> gain_, head_, next_, prev_;
  std::vector<char> queued_, locked_;
};

struct FmOptions {
  double tolerance = 0.02;
  int max_passes = 64;
  int starts = 64;  // independent random starts, best kept
};

PartitionResult fm_partition(const LogicalCircuit& c, int blocks, std::uint64_t seed, const FmOptions& opt = {});

/// Largest-remainder apportionment of `total` seats; every group gets at
/// least one. Ties in the remainder go to the earlier group.
std::vector<int> apportion(const std::vector<int>& sizes, int total);

/// Groups components by module tag, splits the block budget among groups in
/// proportion to their size and partitions each group with FM. Falls back to
/// plain FM when fewer than 90% of components are tagged; `warning` receives
/// the reason.
PartitionResult semantic_prepartition(const LogicalCircuit& c, int blocks, std::uint64_t seed, const FmOptions& opt = {},
                                      std::string* warning = nullptr);

/// `.prt` format:
///   prt 1
///   block <id> [module=<tag>]: c<id>+
std::string serialize_partition(const PartitionResult& p);
PartitionResult parse_partition(std::string_view text, const LogicalCircuit& c);

}  // namespace nepr
