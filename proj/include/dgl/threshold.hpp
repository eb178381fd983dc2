#pragma once

#include <string>
#include <vector>

#include "dgl/rbsde.hpp"

namespace dgl {

// How the barriers first meet on a path: at a node's own values, only at the
// previous node's values (never triggers at fixed dt together with AtMeet at
// the parent, kept for the left-limit dichotomy), or not at all before the
// horizon.
enum class MeetKind { AtMeet, LeftMeet, NoMeet };

struct ThresholdReport {
  StoppingRule theta;
  StoppingRule gamma;               // first barrier-meeting time at/after theta
  std::vector<MeetKind> meet_kind;  // per leaf path
  std::vector<double> min_gap;      // per leaf path: min of U-L along the path
};

// gamma stops at the first node at/after theta where |U-L| <= tol, or
// strictly after theta where the parent's |U-L| <= tol; else at the horizon.
ThresholdReport gamma_threshold(const BarrierPair& barriers, const StoppingRule& theta,
                                double tol = 1e-9);

struct ThresholdDiagnostics {
  ThresholdReport threshold;
  // realized stop depths per leaf path
  std::vector<int> gamma_depth;
  std::vector<int> tau_hat_depth, sigma_hat_depth;
  std::vector<int> tau_eps_depth, sigma_eps_depth;
  // (a) gamma before the horizon only at an actual meet;
  // (b) eps-rules stop at/before gamma (hat depths are informational: a side
  //     that never reflects runs to the horizon regardless of gamma);
  // (c) on paths still separated near the horizon, at most one reflection
  //     side moves over the final quarter of the grid.
  std::vector<std::uint8_t> check_a, check_b, check_c;  // per leaf path
  bool pass_a = true, pass_b = true, pass_c = true;

  bool pass_asserted() const { return pass_a && pass_b; }  // (c) is a diagnostic
};

ThresholdDiagnostics threshold_diagnostics(const ProblemSpec& spec,
                                           const StoppingRule& theta, double eps = 0.1,
                                           double gap_tol = 1e-9);

// Families: separated(delta) | closing_gap(t0[, slope]) | touching(delta, stride)
// | sampled_rough(eps0, seed). All center the band on the lattice walk B and
// default the terminal data to B_T clamped into [L_T, U_T]; jump_free is set
// for the families whose gap profile is continuous in time.
BarrierPair generate_barrier_family(const std::string& name, const LatticePtr& lattice,
                                    const std::vector<double>& params);

}  // namespace dgl
