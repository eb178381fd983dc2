#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgl/errors.hpp"

namespace dgl {

struct TimeGrid {
  double horizon = 1.0;  // terminal time T
  int steps = 1;         // N

  double dt() const { return horizon / steps; }
  double sqrt_dt() const;
  // t_k; computed as horizon*k/steps so depth N lands exactly on T
  double time(int depth) const { return horizon * depth / steps; }
  bool valid() const { return horizon > 0.0 && steps >= 1; }
};

enum class TreeKind { FullBinary, Recombining };

struct NodeRef {
  int depth = 0;
  std::int64_t pos = 0;
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

class Lattice;
using LatticePtr = std::shared_ptr<const Lattice>;

// Binary-tree discretization of Brownian motion: increments are +-sqrt(dt),
// equiprobable. FullBinary keeps all 2^k depth-k nodes (the ground-truth path
// space); Recombining keeps k+1 and is only valid for Markovian data.
//
// FullBinary positions are path codes: child_up doubles the position bits,
// child_down doubles and sets the low bit ('u' = 0, 'd' = 1, most significant
// step first). Recombining positions count down-moves.
class Lattice {
 public:
  static constexpr int kMaxFullBinarySteps = 22;
  static constexpr int kMaxRecombiningSteps = 4096;

  const TimeGrid& grid() const { return grid_; }
  TreeKind kind() const { return kind_; }
  int steps() const { return grid_.steps; }
  double dt() const { return grid_.dt(); }
  double sqrt_dt() const { return sqrt_dt_; }

  std::int64_t node_count() const { return offset_.back(); }
  std::int64_t width(int depth) const;
  std::int64_t index(NodeRef n) const { return offset_[n.depth] + n.pos; }
  NodeRef at(std::int64_t flat) const;
  NodeRef root() const { return {0, 0}; }
  bool is_terminal(NodeRef n) const { return n.depth == grid_.steps; }

  NodeRef child_up(NodeRef n) const;
  NodeRef child_down(NodeRef n) const;
  NodeRef parent(NodeRef n) const;  // FullBinary only

  double brownian(NodeRef n) const { return b_[index(n)]; }

  // Path selectors ("uud"); FullBinary only.
  NodeRef node_at_path(std::string_view path) const;
  std::string path_of(NodeRef n) const;

  friend LatticePtr build_lattice(const TimeGrid& grid, TreeKind kind);

 private:
  Lattice(const TimeGrid& grid, TreeKind kind);

  TimeGrid grid_;
  TreeKind kind_;
  double sqrt_dt_;
  std::vector<std::int64_t> offset_;  // offset_[d] = flat index of (d, 0); last entry = node count
  std::vector<double> b_;
};

LatticePtr build_lattice(const TimeGrid& grid, TreeKind kind);

// One real value per node; structurally adapted (a value depends only on its
// node, i.e. on the path so far). Immutable after construction.
class AdaptedProcess {
 public:
  AdaptedProcess() = default;
  AdaptedProcess(LatticePtr lattice, std::vector<double> values);
  AdaptedProcess(LatticePtr lattice, double constant);

  double operator[](NodeRef n) const { return v_[lat_->index(n)]; }
  double at_flat(std::int64_t i) const { return v_[i]; }
  const std::vector<double>& values() const { return v_; }
  const LatticePtr& lattice_ptr() const { return lat_; }
  const Lattice& lattice() const { return *lat_; }
  bool empty() const { return lat_ == nullptr; }

 private:
  LatticePtr lat_;
  std::vector<double> v_;
};

// Materializes a process from a path functional (t_k, B_0..B_k) -> value.
// FullBinary only: path prefixes are not well-defined on recombining trees.
AdaptedProcess adapted_from_functional(
    const LatticePtr& lattice,
    const std::function<double(double t, std::span<const double> b_prefix)>& fn);

// Markovian variant (t_k, B_k) -> value; valid on both tree kinds.
AdaptedProcess adapted_from_state_functional(
    const LatticePtr& lattice, const std::function<double(double t, double b)>& fn);

// Per-node boolean marking, used for hitting-time predicates.
class NodeMask {
 public:
  NodeMask(LatticePtr lattice, std::vector<std::uint8_t> flags);
  static NodeMask from(const LatticePtr& lattice,
                       const std::function<bool(NodeRef)>& pred);

  bool operator[](NodeRef n) const { return flags_[lat_->index(n)] != 0; }
  const LatticePtr& lattice_ptr() const { return lat_; }

 private:
  LatticePtr lat_;
  std::vector<std::uint8_t> flags_;
};

// Adapted stop/continue marking with forced stop at depth N. Canonical form:
// no flagged node has a flagged strict ancestor, and every path carries exactly
// one flag, so rule equality is flag-set equality. FullBinary only (a node of a
// recombining tree can have a flagged ancestor along one incoming path but not
// another, so "first flagged node" is not per-node there).
class StoppingRule {
 public:
  // Canonicalizes: keeps the first flag on each path, forces leaf stops.
  static StoppingRule from_flags(LatticePtr lattice, std::vector<std::uint8_t> flags);
  static StoppingRule at_depth(LatticePtr lattice, int depth);
  static StoppingRule at_root(LatticePtr lattice) { return at_depth(std::move(lattice), 0); }
  static StoppingRule at_terminal(LatticePtr lattice);

  bool stops_at(NodeRef n) const { return flags_[lat_->index(n)] != 0; }
  const std::vector<std::uint8_t>& flags() const { return flags_; }
  const LatticePtr& lattice_ptr() const { return lat_; }
  const Lattice& lattice() const { return *lat_; }

  // Realized stop depth / node on the path to a depth-N leaf.
  int stop_depth_on_path(std::int64_t leaf_pos) const;
  NodeRef stop_node_on_path(std::int64_t leaf_pos) const;

  // Flagged nodes, ordered by (depth, pos).
  std::vector<NodeRef> frontier() const;

  // reached[i] = node i is at/after this rule's frontier on its path.
  std::vector<std::uint8_t> reached_mask() const;

  friend bool operator==(const StoppingRule& a, const StoppingRule& b) {
    return a.lat_ == b.lat_ && a.flags_ == b.flags_;
  }

 private:
  StoppingRule(LatticePtr lattice, std::vector<std::uint8_t> flags)
      : lat_(std::move(lattice)), flags_(std::move(flags)) {}

  LatticePtr lat_;
  std::vector<std::uint8_t> flags_;
};

// Stops at the first node at/after start's frontier where pred holds, else at
// depth N (the "inf{t >= theta : condition} ∧ T" constructor).
StoppingRule first_hitting_rule(const StoppingRule& start, const NodeMask& pred);

// Pathwise minimum of two rules (earlier realized stop on every path).
StoppingRule rule_min(const StoppingRule& a, const StoppingRule& b);

// a stops at or before b on every path.
bool leq_pathwise(const StoppingRule& a, const StoppingRule& b);

// All canonical rules on a FullBinary lattice with N <= 5 (count follows
// S(0)=1, S(k)=1+S(k-1)^2: 1, 2, 5, 26, 677, 458330).
std::vector<StoppingRule> enumerate_stopping_rules(const LatticePtr& lattice);

// Canonical rules r with theta <= r <= cutoff pathwise. Guarded by the number
// of rules generated (max_rules) rather than tree depth, so tight cutoffs stay
// feasible on deeper trees.
std::vector<StoppingRule> enumerate_rules_between(const LatticePtr& lattice,
                                                  const StoppingRule& theta,
                                                  const StoppingRule& cutoff,
                                                  std::int64_t max_rules);

// Rule count of enumerate_rules_between without materializing.
std::int64_t count_rules_between(const StoppingRule& theta, const StoppingRule& cutoff);

// Barriers L <= U with terminal values pinched between them at depth N.
class BarrierPair {
 public:
  BarrierPair(AdaptedProcess lower, AdaptedProcess upper, std::vector<double> terminal,
              bool jump_free = false);

  const AdaptedProcess& lower() const { return lower_; }
  const AdaptedProcess& upper() const { return upper_; }
  // terminal value xi at leaf (depth N, position leaf_pos)
  double terminal(std::int64_t leaf_pos) const { return terminal_[static_cast<std::size_t>(leaf_pos)]; }
  const std::vector<double>& terminal_values() const { return terminal_; }
  const LatticePtr& lattice_ptr() const { return lower_.lattice_ptr(); }
  // Barriers generated from continuous functionals of (t, B); gates the
  // maximality suite's continuity hypothesis.
  bool jump_free() const { return jump_free_; }

  BarrierPair with_terminal(std::vector<double> terminal) const;

 private:
  AdaptedProcess lower_, upper_;
  std::vector<double> terminal_;
  bool jump_free_;
};

}  // namespace dgl
