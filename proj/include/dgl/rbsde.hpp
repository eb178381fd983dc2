#pragma once

#include <vector>

#include "dgl/bsde.hpp"

namespace dgl {

// Equality tolerances shared with the game layer.
inline constexpr double kContactTol = 1e-10;       // "value sits on the barrier"
inline constexpr double kStepResidualTol = 1e-12;  // one-step identity slack

struct ReflectedStep {
  double y = 0.0;
  double dr_plus = 0.0;
  double dr_minus = 0.0;
};

// Unique complementarity solution of
//   y = a + f(t,y,z)*dt + forcing + dr_plus - dr_minus,   l <= y <= u,
// with dr_plus, dr_minus >= 0, dr_plus*dr_minus = 0, dr_plus > 0 only when
// y = l and dr_minus > 0 only when y = u. Pass -inf / +inf to disable a side.
ReflectedStep reflected_step(double a, double t, double z, const Driver& driver,
                             double dt, double forcing, double l, double u);

// Doubly-reflected solution. r_plus / r_minus hold the per-node increments of
// the Jordan decomposition R = R+ - R- (each >= 0, complementary nodewise);
// the one-step identity reads y = implicit_step(., dV + dr_plus - dr_minus).
struct SolutionTriple {
  AdaptedProcess y;
  AdaptedProcess z;
  AdaptedProcess r_plus;
  AdaptedProcess r_minus;
};

SolutionTriple solve_rbsde(const ProblemSpec& spec);

enum class BarrierSide { Lower, Upper };

// Reflection on one side only; the other barrier is ignored and the matching
// increment process is identically zero.
SolutionTriple solve_one_barrier(const ProblemSpec& spec, BarrierSide side);

enum class PenaltyScheme { TwoSided, LowerOnly, UpperOnly };

// TwoSided: plain backward solve with driver f + n(y-L)^- - n(y-U)^+.
// LowerOnly: driver f + n(y-L)^- reflected at U (iterates increase in n).
// UpperOnly: driver f - n(y-U)^+ reflected at L (iterates decrease in n).
// The penalty only lowers the y-monotonicity constant, so no extra step-size
// restriction appears for large n.
BsdePair solve_penalized(const ProblemSpec& spec, double n, PenaltyScheme scheme);

struct PenaltyRow {
  double n = 0.0;
  double sup_error = 0.0;      // max over nodes of |Y^n - Y_reflected|
  bool lower_monotone = true;  // LowerOnly iterate >= previous one nodewise
  bool upper_monotone = true;  // UpperOnly iterate <= previous one nodewise
  bool err_monotone = true;    // sup_error <= previous sup_error
  double runtime_ms = 0.0;
};

// Convergence study of the three penalization schemes against solve_rbsde.
// Monotonicity flags compare consecutive rows with 1e-12 slack.
std::vector<PenaltyRow> penalty_study(const ProblemSpec& spec,
                                      const std::vector<double>& n_values);

struct SolutionAudit {
  std::int64_t violations = 0;
  double max_step_residual = 0.0;  // vs kStepResidualTol
  double max_bound_breach = 0.0;   // (L - y)^+ or (y - U)^+ on reflected sides
  double max_contact_gap = 0.0;    // |y - barrier| where an increment fired
  bool complementarity_ok = true;  // dr_plus * dr_minus == 0 nodewise

  bool pass() const { return violations == 0; }
};

// Checks the solution invariants nodewise: barrier bounds on the reflected
// sides, nonnegative complementary increments, Skorokhod contact where an
// increment fired (kContactTol), the one-step identity (kStepResidualTol),
// and terminal data y(leaf) = xi(leaf).
SolutionAudit audit_solution(const ProblemSpec& spec, const SolutionTriple& sol,
                             bool lower_active = true, bool upper_active = true);

// Pathwise running sums of per-node increments, own node included. FullBinary
// only.
AdaptedProcess cumulative_along_paths(const AdaptedProcess& increments);

// Exponential rescaling y -> e^{at} y as an exact lattice-level transform:
// barriers and terminal data are scaled by e^{a t_k}, forcing increments by
// the child-time factor e^{a t_{k+1}}, and the driver becomes
//   f~(t,y,z) = e^{a(t+dt)} f(t, e^{-at} y, e^{-a(t+dt)} z) + ((1-e^{a dt})/dt) y,
// which solves the transformed one-step equation with no discretization drift.
ProblemSpec exp_rescale(const ProblemSpec& spec, double a);

struct RescaleCheck {
  bool pass = true;
  double max_error_y = 0.0;  // |Y~ - e^{at} Y|, gate
  double max_error_z = 0.0;  // |Z~ - e^{a(t+dt)} Z|, informational
};

// Solves both the original and rescaled problems and compares nodewise.
RescaleCheck change_of_variable_check(const ProblemSpec& spec, double a,
                                      double tol = 1e-10);

}  // namespace dgl
