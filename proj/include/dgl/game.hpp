#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dgl/rbsde.hpp"

namespace dgl {

struct RulePair {
  StoppingRule tau;
  StoppingRule sigma;
};

// Payoff of one played game along the path to leaf_pos:
//   L at the tau node when tau stops at/before sigma and before the horizon,
//   U at the sigma node when sigma stops strictly first (even against tau = T),
//   xi at the leaf when both run to the horizon.
double payoff_J(const BarrierPair& barriers, std::int64_t leaf_pos, NodeRef tau_node,
                NodeRef sigma_node);

// E^f_{theta, tau^sigma}(J(tau,sigma)): one value per theta-frontier node,
// aligned with theta.frontier(). Requires theta <= tau, sigma pathwise.
std::vector<double> pair_value(const ProblemSpec& spec, const StoppingRule& theta,
                               const StoppingRule& tau, const StoppingRule& sigma);

// Strategy-set size guards. 1000 admits every full sweep up to 4 steps
// (rule counts 1, 2, 5, 26, 677) plus tightly cut-off sweeps on deeper trees;
// the all-pairs saddle scan stores and cross-checks the full value table and
// stops at 3 steps' worth of rules.
inline constexpr std::int64_t kMaxSweepRules = 1000;
inline constexpr std::int64_t kMaxSaddleScanRules = 100;

struct ValueSweep {
  std::vector<NodeRef> frontier;           // theta-frontier nodes
  std::vector<double> upper;               // min over sigma of max over tau
  std::vector<double> lower;               // max over tau of min over sigma
  std::vector<std::size_t> argmax_tau;     // per frontier node, witness indices
  std::vector<std::size_t> argmin_sigma;
  std::int64_t rule_count = 0;             // per strategy set
};

// Exact min-max / max-min over all stopping rules at/after theta.
ValueSweep value_bruteforce(const ProblemSpec& spec, const StoppingRule& theta);

// Same with both strategy sets restricted to rules stopping at/before cutoff.
ValueSweep restricted_horizon_value(const ProblemSpec& spec, const StoppingRule& theta,
                                    const StoppingRule& cutoff);

struct SaddleSet {
  std::vector<double> eps_list;
  std::vector<RulePair> eps_pairs;  // first hits of {Y <= L+eps} / {Y >= U-eps}
  RulePair star;                    // eps = contact tolerance
  RulePair hat;                     // first reflection increment after theta
};

// Candidate optimal pairs read off one solve_rbsde pass. Hat rules stop where
// the cumulative reflection increment since theta (own node included) first
// exceeds kContactTol, falling through to the horizon on paths whose side
// never reflects. On a finite tree an adapted process between the barriers
// always exists, so the two-sided problem stays well posed up to the horizon
// and no earlier cutoff applies.
SaddleSet extract_saddles(const ProblemSpec& spec, const StoppingRule& theta,
                          const std::vector<double>& eps_list);

struct SaddleCheck {
  bool pass = true;
  double worst_violation = 0.0;  // largest breach of either saddle inequality
  bool witness_is_tau = true;    // side of the breaching deviation
  std::size_t witness_rule = 0;  // index into the enumerated opponent rules
  NodeRef witness_node;          // theta-frontier node where it occurred
};

// Tests E^f(tau, sigma0) <= E^f(tau0, sigma0) <= E^f(tau0, sigma) against all
// enumerated opponent rules at/after theta, nodewise within tol.
SaddleCheck verify_saddle(const ProblemSpec& spec, const StoppingRule& theta,
                          const RulePair& pair, double tol = 1e-9);

struct EpsSaddleFit {
  std::vector<double> eps;
  std::vector<double> violation;  // worst breach of the saddle inequalities per pair
  double c_fitted = 0.0;          // least-squares slope of violation ~ C * eps
};

// Measures how far each eps-pair is from an exact saddle and fits the single
// constant C with violation <= C * eps across the grid. C is reported, not
// asserted: the slack is known to be linear in eps with an instance-dependent
// constant.
EpsSaddleFit fit_eps_constant(const ProblemSpec& spec, const StoppingRule& theta,
                              const std::vector<double>& eps_list);

struct MaximalityReport {
  std::int64_t rule_count = 0;
  std::int64_t saddle_pairs = 0;
  // failure counts, one per verified property:
  std::int64_t fail_hat_bound = 0;      // delta <= tau_hat ^ sigma_hat pathwise
  std::int64_t fail_flat_before = 0;    // cumulative increments > tol before delta
  std::int64_t fail_martingale = 0;     // classify_ef not Martingale on [theta, delta)
  std::int64_t fail_stop_identity = 0;  // Y at delta != pair payoff
  std::int64_t fail_star_bound = 0;     // realized stop before the star pair
  bool barriers_jump_free = true;       // continuity hypothesis behind the theorem
  std::string witness;                  // first failure, human-readable

  bool pass() const {
    return fail_hat_bound == 0 && fail_flat_before == 0 && fail_martingale == 0 &&
           fail_stop_identity == 0 && fail_star_bound == 0;
  }
};

// Exhaustively discovers every exact saddle pair among enumerated rules and
// verifies, for each: the stop delta = tau^sigma never outlives the hat pair,
// reflection is flat strictly before delta, Y is an E^f-martingale up to
// delta, Y at delta equals the realized payoff, and the star pair stops first
// on the branch whose rule fires (the other rule is never realized there, so
// it carries no bound: tau stopping at a contact point makes every
// sufficiently good sigma a saddle component, however early it pretends to
// stop).
MaximalityReport maximality_check(const ProblemSpec& spec, const StoppingRule& theta,
                                  double tol = 1e-9);

struct GameReport {
  StoppingRule theta;
  std::vector<NodeRef> frontier;
  std::vector<double> value_rbsde;  // solve_rbsde y at the frontier
  std::vector<double> value_upper;
  std::vector<double> value_lower;
  SaddleSet saddles;
  SaddleCheck star_check;
  SaddleCheck hat_check;
  std::optional<MaximalityReport> maximality;
};

// One-stop verification bundle used by the CLI: brute-force values, saddle
// extraction + exact verification, optional maximality scan.
GameReport game_verify(const ProblemSpec& spec, const StoppingRule& theta,
                       const std::vector<double>& eps_list, bool with_maximality);

}  // namespace dgl
