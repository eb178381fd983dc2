#pragma once

#include <vector>

#include "dgl/driver.hpp"
#include "dgl/lattice.hpp"

namespace dgl {

// Solution pair of an unreflected backward solve. At every non-terminal node
//   y = (y_up + y_down)/2 + f(t, y, z) * dt + dV,   z = (y_up - y_down)/(2 sqrt(dt));
// z is zero at terminal nodes.
struct BsdePair {
  AdaptedProcess y;
  AdaptedProcess z;
};

// Unique y solving y = a + f(t,y,z)*dt + forcing_increment. Monotone
// bracketing + bisection on h(y) = y - f(t,y,z)*dt, strictly increasing while
// mono_y * dt < 1; affine drivers short-circuit to the closed form.
// Residual tolerance: |h(y) - a - forcing| <= 1e-13 * (1 + |a|).
double implicit_step(double a, double t, double z, const Driver& driver, double dt,
                     double forcing_increment = 0.0);

// Per-node forcing increments (predictable projection of dV); zero at leaves
// and when spec.forcing is absent.
std::vector<double> forcing_increments(const ProblemSpec& spec);

// Backward solve with terminal data taken from spec.barriers.terminal().
// Barriers themselves are ignored here. Works on both tree kinds.
BsdePair solve_bsde(const ProblemSpec& spec);
BsdePair solve_bsde(const ProblemSpec& spec, const std::vector<double>& terminal);

// Full backward pass where nodes at/after the stop frontier carry the payoff
// frozen along the path, and strictly-before nodes apply implicit steps. The
// result at a node n before the frontier is E^f_{n,stop}(payoff).
AdaptedProcess ef_backward(const ProblemSpec& spec, const StoppingRule& stop,
                           const AdaptedProcess& payoff);

// E^f_{observe,stop}(payoff): values of ef_backward read on observe_at's
// frontier, aligned with observe_at.frontier() order. Requires
// observe_at <= stop pathwise.
std::vector<double> nonlinear_expectation(const ProblemSpec& spec, const StoppingRule& stop,
                                          const AdaptedProcess& payoff,
                                          const StoppingRule& observe_at);

enum class MartingaleClass { Martingale, Supermartingale, Submartingale, Neither };

struct ClassifyResult {
  MartingaleClass cls = MartingaleClass::Martingale;
  double max_up = 0.0;    // largest positive one-step drift x - step(children)
  double max_down = 0.0;  // largest negative drift, in absolute value
  NodeRef witness_up, witness_down;
  bool empty_region = false;
};

// Classifies x on the node set at/after `from` and strictly before `to` by the
// sign of x(node) - implicit_step(mean of children, ...). FullBinary only.
ClassifyResult classify_ef(const ProblemSpec& spec, const AdaptedProcess& x,
                           const StoppingRule& from, const StoppingRule& to,
                           double tol = 1e-10);

struct StrictComparisonResult {
  bool holds = true;
  // set when the implication fails: equal solve values at `node` although the
  // terminal data differ below it
  NodeRef node;
  std::int64_t leaf_pos = -1;
  double value_gap = 0.0;
  double terminal_gap = 0.0;
};

// Checks on every node at/before sigma's frontier: equal solve values (within
// tol) imply xi1 = xi2 on every leaf below that node. Requires xi1 >= xi2.
StrictComparisonResult strict_comparison_check(const ProblemSpec& spec,
                                               const std::vector<double>& xi1,
                                               const std::vector<double>& xi2,
                                               const StoppingRule& sigma,
                                               double tol = 1e-10);

}  // namespace dgl
