#include "dgl/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dgl {

double TimeGrid::sqrt_dt() const { return std::sqrt(dt()); }

Lattice::Lattice(const TimeGrid& grid, TreeKind kind)
    : grid_(grid), kind_(kind), sqrt_dt_(grid.sqrt_dt()) {
  const int n = grid_.steps;
  offset_.resize(static_cast<std::size_t>(n) + 2);
  offset_[0] = 0;
  for (int d = 0; d <= n; ++d) {
    const std::int64_t w =
        kind_ == TreeKind::FullBinary ? (std::int64_t{1} << d) : (d + 1);
    offset_[static_cast<std::size_t>(d) + 1] = offset_[static_cast<std::size_t>(d)] + w;
  }
  b_.resize(static_cast<std::size_t>(node_count()));
  b_[0] = 0.0;
  for (int d = 0; d < n; ++d) {
    for (std::int64_t p = 0; p < width(d); ++p) {
      const double b = b_[static_cast<std::size_t>(index({d, p}))];
      b_[static_cast<std::size_t>(index(child_up({d, p})))] = b + sqrt_dt_;
      b_[static_cast<std::size_t>(index(child_down({d, p})))] = b - sqrt_dt_;
    }
  }
}

std::int64_t Lattice::width(int depth) const {
  return kind_ == TreeKind::FullBinary ? (std::int64_t{1} << depth)
                                       : (static_cast<std::int64_t>(depth) + 1);
}

NodeRef Lattice::at(std::int64_t flat) const {
  int d = 0;
  while (offset_[static_cast<std::size_t>(d) + 1] <= flat) ++d;
  return {d, flat - offset_[static_cast<std::size_t>(d)]};
}

NodeRef Lattice::child_up(NodeRef n) const {
  if (n.depth >= grid_.steps) throw GuardError("child of a terminal node");
  return kind_ == TreeKind::FullBinary ? NodeRef{n.depth + 1, n.pos * 2}
                                       : NodeRef{n.depth + 1, n.pos};
}

NodeRef Lattice::child_down(NodeRef n) const {
  if (n.depth >= grid_.steps) throw GuardError("child of a terminal node");
  return kind_ == TreeKind::FullBinary ? NodeRef{n.depth + 1, n.pos * 2 + 1}
                                       : NodeRef{n.depth + 1, n.pos + 1};
}

NodeRef Lattice::parent(NodeRef n) const {
  if (kind_ != TreeKind::FullBinary)
    throw GuardError("parent() needs a FullBinary lattice (recombining nodes have two)");
  if (n.depth == 0) throw GuardError("root has no parent");
  return {n.depth - 1, n.pos >> 1};
}

NodeRef Lattice::node_at_path(std::string_view path) const {
  if (kind_ != TreeKind::FullBinary)
    throw GuardError("path selectors need a FullBinary lattice");
  if (static_cast<int>(path.size()) > grid_.steps)
    throw Error("path selector longer than the tree depth: '" + std::string(path) + "'");
  NodeRef n{0, 0};
  for (char c : path) {
    if (c == 'u')
      n = child_up(n);
    else if (c == 'd')
      n = child_down(n);
    else
      throw Error(std::string("invalid path selector character '") + c + "' (use 'u'/'d')");
  }
  return n;
}

std::string Lattice::path_of(NodeRef n) const {
  if (kind_ != TreeKind::FullBinary)
    throw GuardError("path selectors need a FullBinary lattice");
  std::string s(static_cast<std::size_t>(n.depth), 'u');
  for (int i = 0; i < n.depth; ++i)
    if ((n.pos >> (n.depth - 1 - i)) & 1) s[static_cast<std::size_t>(i)] = 'd';
  return s;
}

LatticePtr build_lattice(const TimeGrid& grid, TreeKind kind) {
  if (!grid.valid()) throw Error("invalid time grid (need horizon > 0, steps >= 1)");
  if (kind == TreeKind::FullBinary && grid.steps > Lattice::kMaxFullBinarySteps)
    throw GuardError("FullBinary depth cap exceeded: steps = " + std::to_string(grid.steps) +
                     " > " + std::to_string(Lattice::kMaxFullBinarySteps));
  if (kind == TreeKind::Recombining && grid.steps > Lattice::kMaxRecombiningSteps)
    throw GuardError("Recombining depth cap exceeded: steps = " + std::to_string(grid.steps));
  return LatticePtr(new Lattice(grid, kind));
}

AdaptedProcess::AdaptedProcess(LatticePtr lattice, std::vector<double> values)
    : lat_(std::move(lattice)), v_(std::move(values)) {
  if (!lat_) throw Error("AdaptedProcess needs a lattice");
  if (static_cast<std::int64_t>(v_.size()) != lat_->node_count())
    throw Error("AdaptedProcess value count does not match the lattice");
}

AdaptedProcess::AdaptedProcess(LatticePtr lattice, double constant)
    : lat_(std::move(lattice)) {
  if (!lat_) throw Error("AdaptedProcess needs a lattice");
  v_.assign(static_cast<std::size_t>(lat_->node_count()), constant);
}

AdaptedProcess adapted_from_functional(
    const LatticePtr& lattice,
    const std::function<double(double, std::span<const double>)>& fn) {
  if (lattice->kind() != TreeKind::FullBinary)
    throw GuardError("path functionals need a FullBinary lattice; use the (t, B) variant");
  std::vector<double> out(static_cast<std::size_t>(lattice->node_count()));
  std::vector<double> prefix(static_cast<std::size_t>(lattice->steps()) + 1);
  // depth-first walk keeping the B prefix of the current path
  auto walk = [&](auto&& self, NodeRef n) -> void {
    prefix[static_cast<std::size_t>(n.depth)] = lattice->brownian(n);
    const double v = fn(lattice->grid().time(n.depth),
                        std::span<const double>(prefix.data(), static_cast<std::size_t>(n.depth) + 1));
    if (!std::isfinite(v)) throw NumericError("functional returned a non-finite value");
    out[static_cast<std::size_t>(lattice->index(n))] = v;
    if (!lattice->is_terminal(n)) {
      self(self, lattice->child_up(n));
      self(self, lattice->child_down(n));
    }
  };
  walk(walk, lattice->root());
  return AdaptedProcess(lattice, std::move(out));
}

AdaptedProcess adapted_from_state_functional(
    const LatticePtr& lattice, const std::function<double(double, double)>& fn) {
  std::vector<double> out(static_cast<std::size_t>(lattice->node_count()));
  for (int d = 0; d <= lattice->steps(); ++d) {
    const double t = lattice->grid().time(d);
    for (std::int64_t p = 0; p < lattice->width(d); ++p) {
      const double v = fn(t, lattice->brownian({d, p}));
      if (!std::isfinite(v)) throw NumericError("functional returned a non-finite value");
      out[static_cast<std::size_t>(lattice->index({d, p}))] = v;
    }
  }
  return AdaptedProcess(lattice, std::move(out));
}

NodeMask::NodeMask(LatticePtr lattice, std::vector<std::uint8_t> flags)
    : lat_(std::move(lattice)), flags_(std::move(flags)) {
  if (!lat_ || static_cast<std::int64_t>(flags_.size()) != lat_->node_count())
    throw Error("NodeMask flag count does not match the lattice");
}

NodeMask NodeMask::from(const LatticePtr& lattice, const std::function<bool(NodeRef)>& pred) {
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(lattice->node_count()));
  for (int d = 0; d <= lattice->steps(); ++d)
    for (std::int64_t p = 0; p < lattice->width(d); ++p)
      flags[static_cast<std::size_t>(lattice->index({d, p}))] = pred({d, p}) ? 1 : 0;
  return NodeMask(lattice, std::move(flags));
}

namespace {

void require_full_binary(const LatticePtr& lat, const char* who) {
  if (!lat) throw Error(std::string(who) + " needs a lattice");
  if (lat->kind() != TreeKind::FullBinary)
    throw GuardError(std::string(who) + " needs a FullBinary lattice");
}

// Keeps the first flag on each root-to-leaf path, forcing a leaf stop when a
// path carries none.
void canonicalize(const Lattice& lat, std::vector<std::uint8_t>& flags) {
  const int n = lat.steps();
  auto walk = [&](auto&& self, NodeRef node, bool stopped) -> void {
    auto& f = flags[static_cast<std::size_t>(lat.index(node))];
    if (stopped) {
      f = 0;
    } else if (node.depth == n) {
      f = 1;
    } else if (f) {
      stopped = true;
    }
    if (node.depth < n) {
      self(self, lat.child_up(node), stopped || f != 0);
      self(self, lat.child_down(node), stopped || f != 0);
    }
  };
  walk(walk, lat.root(), false);
}

}  // namespace

StoppingRule StoppingRule::from_flags(LatticePtr lattice, std::vector<std::uint8_t> flags) {
  require_full_binary(lattice, "StoppingRule");
  if (static_cast<std::int64_t>(flags.size()) != lattice->node_count())
    throw Error("StoppingRule flag count does not match the lattice");
  canonicalize(*lattice, flags);
  return StoppingRule(std::move(lattice), std::move(flags));
}

StoppingRule StoppingRule::at_depth(LatticePtr lattice, int depth) {
  require_full_binary(lattice, "StoppingRule");
  if (depth < 0 || depth > lattice->steps())
    throw Error("stop depth outside [0, steps]");
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(lattice->node_count()));
  for (std::int64_t p = 0; p < lattice->width(depth); ++p)
    flags[static_cast<std::size_t>(lattice->index({depth, p}))] = 1;
  return StoppingRule(std::move(lattice), std::move(flags));
}

StoppingRule StoppingRule::at_terminal(LatticePtr lattice) {
  const int n = lattice ? lattice->steps() : 0;
  return at_depth(std::move(lattice), n);
}

int StoppingRule::stop_depth_on_path(std::int64_t leaf_pos) const {
  const int n = lat_->steps();
  for (int d = 0; d <= n; ++d) {
    if (flags_[static_cast<std::size_t>(lat_->index({d, leaf_pos >> (n - d)}))]) return d;
  }
  throw Error("non-canonical rule: path without a stop");
}

NodeRef StoppingRule::stop_node_on_path(std::int64_t leaf_pos) const {
  const int d = stop_depth_on_path(leaf_pos);
  return {d, leaf_pos >> (lat_->steps() - d)};
}

std::vector<NodeRef> StoppingRule::frontier() const {
  std::vector<NodeRef> out;
  for (int d = 0; d <= lat_->steps(); ++d)
    for (std::int64_t p = 0; p < lat_->width(d); ++p)
      if (flags_[static_cast<std::size_t>(lat_->index({d, p}))]) out.push_back({d, p});
  return out;
}

std::vector<std::uint8_t> StoppingRule::reached_mask() const {
  std::vector<std::uint8_t> reached(flags_.size());
  reached[0] = flags_[0];
  for (int d = 1; d <= lat_->steps(); ++d)
    for (std::int64_t p = 0; p < lat_->width(d); ++p) {
      const auto i = static_cast<std::size_t>(lat_->index({d, p}));
      reached[i] = flags_[i] ||
                   reached[static_cast<std::size_t>(lat_->index({d - 1, p >> 1}))];
    }
  return reached;
}

StoppingRule first_hitting_rule(const StoppingRule& start, const NodeMask& pred) {
  const LatticePtr& lat = start.lattice_ptr();
  if (pred.lattice_ptr() != lat) throw Error("first_hitting_rule: lattice mismatch");
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(lat->node_count()));
  auto walk = [&](auto&& self, NodeRef n, bool after_start) -> void {
    after_start = after_start || start.stops_at(n);
    if (after_start && (pred[n] || lat->is_terminal(n))) {
      flags[static_cast<std::size_t>(lat->index(n))] = 1;
      return;  // descendants stay unflagged (canonical form)
    }
    if (!lat->is_terminal(n)) {
      self(self, lat->child_up(n), after_start);
      self(self, lat->child_down(n), after_start);
    }
  };
  walk(walk, lat->root(), false);
  return StoppingRule::from_flags(lat, std::move(flags));
}

StoppingRule rule_min(const StoppingRule& a, const StoppingRule& b) {
  if (a.lattice_ptr() != b.lattice_ptr()) throw Error("rule_min: lattice mismatch");
  std::vector<std::uint8_t> flags(a.flags().size());
  for (std::size_t i = 0; i < flags.size(); ++i)
    flags[i] = a.flags()[i] | b.flags()[i];
  // union of two antichains: the first flag on each path is the pathwise min
  return StoppingRule::from_flags(a.lattice_ptr(), std::move(flags));
}

bool leq_pathwise(const StoppingRule& a, const StoppingRule& b) {
  if (a.lattice_ptr() != b.lattice_ptr()) throw Error("leq_pathwise: lattice mismatch");
  const auto reached_a = a.reached_mask();
  // a <= b iff b never stops strictly before a's frontier
  for (std::size_t i = 0; i < reached_a.size(); ++i)
    if (b.flags()[i] && !reached_a[i]) return false;
  return true;
}

namespace {

std::int64_t count_rules_rec(const Lattice& lat, NodeRef n, bool reached_theta,
                             const StoppingRule& theta, const StoppingRule& cutoff,
                             std::int64_t cap) {
  reached_theta = reached_theta || theta.stops_at(n);
  const bool must_stop = lat.is_terminal(n) || (reached_theta && cutoff.stops_at(n));
  if (must_stop) return 1;
  const std::int64_t cu = count_rules_rec(lat, lat.child_up(n), reached_theta, theta, cutoff, cap);
  if (cu > cap) return cap + 1;
  const std::int64_t cd = count_rules_rec(lat, lat.child_down(n), reached_theta, theta, cutoff, cap);
  if (cd > cap || cu > (cap + 1) / (cd > 0 ? cd : 1)) return cap + 1;
  const std::int64_t both = cu * cd;
  return reached_theta ? std::min(both + 1, cap + 1) : both;
}

}  // namespace

std::int64_t count_rules_between(const StoppingRule& theta, const StoppingRule& cutoff) {
  if (theta.lattice_ptr() != cutoff.lattice_ptr())
    throw Error("count_rules_between: lattice mismatch");
  constexpr std::int64_t kCap = std::int64_t{1} << 40;
  return count_rules_rec(theta.lattice(), theta.lattice().root(), false, theta, cutoff, kCap);
}

std::vector<StoppingRule> enumerate_rules_between(const LatticePtr& lattice,
                                                  const StoppingRule& theta,
                                                  const StoppingRule& cutoff,
                                                  std::int64_t max_rules) {
  require_full_binary(lattice, "enumerate_rules_between");
  if (theta.lattice_ptr() != lattice || cutoff.lattice_ptr() != lattice)
    throw Error("enumerate_rules_between: lattice mismatch");
  if (!leq_pathwise(theta, cutoff))
    throw GuardError("enumerate_rules_between: cutoff must stop at/after theta on every path");
  const std::int64_t total = count_rules_between(theta, cutoff);
  if (total > max_rules)
    throw GuardError("rule enumeration guard: " + std::to_string(total) + " rules exceed the cap of " +
                     std::to_string(max_rules));

  std::vector<StoppingRule> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(lattice->node_count()));
  // Worklist of subtree roots still needing a decision; at each free node the
  // rule either stops (flag, drop subtree) or defers to both children.
  std::vector<std::pair<NodeRef, bool>> pending;  // (node, reached_theta)
  auto emit = [&](auto&& self) -> void {
    if (pending.empty()) {
      out.emplace_back(StoppingRule::from_flags(lattice, flags));
      return;
    }
    auto [n, reached] = pending.back();
    pending.pop_back();
    reached = reached || theta.stops_at(n);
    const bool must_stop = lattice->is_terminal(n) || (reached && cutoff.stops_at(n));
    const auto i = static_cast<std::size_t>(lattice->index(n));
    if (reached) {  // option: stop here
      flags[i] = 1;
      self(self);
      flags[i] = 0;
    }
    if (!must_stop) {  // option: continue into both children
      pending.emplace_back(lattice->child_up(n), reached);
      pending.emplace_back(lattice->child_down(n), reached);
      self(self);
      pending.pop_back();
      pending.pop_back();
    }
    pending.emplace_back(n, reached);
  };
  pending.emplace_back(lattice->root(), false);
  emit(emit);
  return out;
}

std::vector<StoppingRule> enumerate_stopping_rules(const LatticePtr& lattice) {
  require_full_binary(lattice, "enumerate_stopping_rules");
  if (lattice->steps() > 5)
    throw GuardError("enumerate_stopping_rules guard: steps = " +
                     std::to_string(lattice->steps()) + " > 5");
  return enumerate_rules_between(lattice, StoppingRule::at_root(lattice),
                                 StoppingRule::at_terminal(lattice),
                                 std::int64_t{1} << 20);
}

BarrierPair::BarrierPair(AdaptedProcess lower, AdaptedProcess upper,
                         std::vector<double> terminal, bool jump_free)
    : lower_(std::move(lower)), upper_(std::move(upper)),
      terminal_(std::move(terminal)), jump_free_(jump_free) {
  if (lower_.lattice_ptr() != upper_.lattice_ptr())
    throw Error("BarrierPair: lattice mismatch");
  const Lattice& lat = lower_.lattice();
  const int n = lat.steps();
  if (static_cast<std::int64_t>(terminal_.size()) != lat.width(n))
    throw Error("BarrierPair: terminal value count does not match leaf count");
  for (std::int64_t i = 0; i < lat.node_count(); ++i)
    if (!(lower_.at_flat(i) <= upper_.at_flat(i)))
      throw Error("BarrierPair: lower > upper at node " + std::to_string(i));
  for (std::int64_t p = 0; p < lat.width(n); ++p) {
    const double xi = terminal_[static_cast<std::size_t>(p)];
    if (!(lower_[{n, p}] <= xi && xi <= upper_[{n, p}]))
      throw Error("BarrierPair: terminal value escapes the barrier band at leaf " +
                  std::to_string(p));
  }
}

BarrierPair BarrierPair::with_terminal(std::vector<double> terminal) const {
  return BarrierPair(lower_, upper_, std::move(terminal), jump_free_);
}

}  // namespace dgl
