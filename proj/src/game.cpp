#include "dgl/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dgl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Payoff at each frontier node of rho = tau ^ sigma. At such a node neither
// rule has stopped strictly earlier, so the three cases of J are decided by
// the local flags alone.
void fill_stopped_payoff(const BarrierPair& barriers, const StoppingRule& tau,
                         const StoppingRule& sigma, const std::vector<NodeRef>& frontier,
                         std::vector<double>& pay) {
  const Lattice& lat = *barriers.lattice_ptr();
  const int n = lat.steps();
  for (const NodeRef node : frontier) {
    double v;
    if (tau.stops_at(node) && node.depth < n)
      v = barriers.lower()[node];
    else if (!tau.stops_at(node) && sigma.stops_at(node))
      v = barriers.upper()[node];
    else
      v = barriers.terminal(node.pos);
    pay[static_cast<std::size_t>(lat.index(node))] = v;
  }
}

std::vector<StoppingRule> rules_from(const ProblemSpec& spec, const StoppingRule& theta,
                                     const StoppingRule& cutoff, std::int64_t cap) {
  const std::int64_t total = count_rules_between(theta, cutoff);
  if (total > cap)
    throw GuardError("strategy-set guard: " + std::to_string(total) +
                     " stopping rules exceed the cap of " + std::to_string(cap) +
                     " (full sweeps need steps <= 4, the saddle scan steps <= 3; "
                     "tighter cutoffs lift the depth limit)");
  return enumerate_rules_between(spec.lattice, theta, cutoff, cap);
}

ValueSweep sweep_over(const ProblemSpec& spec, const StoppingRule& theta,
                      const std::vector<StoppingRule>& rules) {
  ValueSweep s;
  s.frontier = theta.frontier();
  const std::size_t fsize = s.frontier.size();
  const std::size_t count = rules.size();
  s.rule_count = static_cast<std::int64_t>(count);
  std::vector<double> rowmin(count * fsize, kInf);   // per tau: min over sigma
  std::vector<double> colmax(count * fsize, -kInf);  // per sigma: max over tau
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) {
      const std::vector<double> v = pair_value(spec, theta, rules[i], rules[j]);
      for (std::size_t k = 0; k < fsize; ++k) {
        rowmin[i * fsize + k] = std::min(rowmin[i * fsize + k], v[k]);
        colmax[j * fsize + k] = std::max(colmax[j * fsize + k], v[k]);
      }
    }
  s.upper.assign(fsize, kInf);
  s.lower.assign(fsize, -kInf);
  s.argmin_sigma.assign(fsize, 0);
  s.argmax_tau.assign(fsize, 0);
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t k = 0; k < fsize; ++k) {
      if (colmax[r * fsize + k] < s.upper[k]) {
        s.upper[k] = colmax[r * fsize + k];
        s.argmin_sigma[k] = r;
      }
      if (rowmin[r * fsize + k] > s.lower[k]) {
        s.lower[k] = rowmin[r * fsize + k];
        s.argmax_tau[k] = r;
      }
    }
  return s;
}

// Hitting rules of {Y <= L+eps} and {Y >= U-eps} from theta on.
RulePair eps_pair(const ProblemSpec& spec, const SolutionTriple& sol,
                  const StoppingRule& theta, double eps) {
  const LatticePtr& lat = spec.lattice;
  const NodeMask low = NodeMask::from(lat, [&](NodeRef n) {
    return sol.y[n] <= spec.barriers.lower()[n] + eps;
  });
  const NodeMask high = NodeMask::from(lat, [&](NodeRef n) {
    return sol.y[n] >= spec.barriers.upper()[n] - eps;
  });
  return {first_hitting_rule(theta, low), first_hitting_rule(theta, high)};
}

// Cumulative increment since theta, own node included; zero strictly before
// theta's frontier.
std::vector<double> rebased_cumulative(const StoppingRule& theta,
                                       const AdaptedProcess& increments) {
  const LatticePtr& lat = increments.lattice_ptr();
  const AdaptedProcess cum = cumulative_along_paths(increments);
  const auto reached = theta.reached_mask();
  std::vector<double> out(static_cast<std::size_t>(lat->node_count()), 0.0);
  // base = cumulative strictly before the theta node of each path
  std::vector<double> base(out.size(), 0.0);
  for (int d = 0; d <= lat->steps(); ++d)
    for (std::int64_t p = 0; p < lat->width(d); ++p) {
      const NodeRef n{d, p};
      const auto i = static_cast<std::size_t>(lat->index(n));
      if (!reached[i]) continue;
      base[i] = theta.stops_at(n)
                    ? cum[n] - increments[n]
                    : base[static_cast<std::size_t>(lat->index(lat->parent(n)))];
      out[i] = cum[n] - base[i];
    }
  return out;
}

// First node at/after theta whose cumulative increment since theta (own node
// included) exceeds kContactTol.
StoppingRule first_increment_rule(const StoppingRule& theta,
                                  const AdaptedProcess& increments) {
  const LatticePtr& lat = increments.lattice_ptr();
  const std::vector<double> since = rebased_cumulative(theta, increments);
  const NodeMask fired = NodeMask::from(lat, [&](NodeRef n) {
    return since[static_cast<std::size_t>(lat->index(n))] > kContactTol;
  });
  return first_hitting_rule(theta, fired);
}

}  // namespace

double payoff_J(const BarrierPair& barriers, std::int64_t leaf_pos, NodeRef tau_node,
                NodeRef sigma_node) {
  const Lattice& lat = *barriers.lattice_ptr();
  const int n = lat.steps();
  auto on_path = [&](NodeRef node) {
    return node.depth >= 0 && node.depth <= n && node.pos == (leaf_pos >> (n - node.depth));
  };
  if (!on_path(tau_node) || !on_path(sigma_node))
    throw Error("payoff_J: stop node off the given path");
  if (tau_node.depth <= sigma_node.depth && tau_node.depth < n)
    return barriers.lower()[tau_node];
  if (sigma_node.depth < tau_node.depth) return barriers.upper()[sigma_node];
  return barriers.terminal(leaf_pos);
}

std::vector<double> pair_value(const ProblemSpec& spec, const StoppingRule& theta,
                               const StoppingRule& tau, const StoppingRule& sigma) {
  if (!leq_pathwise(theta, tau) || !leq_pathwise(theta, sigma))
    throw GuardError("pair_value: strategies must stop at/after theta");
  const StoppingRule rho = rule_min(tau, sigma);
  std::vector<double> pay(static_cast<std::size_t>(spec.lattice->node_count()), 0.0);
  fill_stopped_payoff(spec.barriers, tau, sigma, rho.frontier(), pay);
  const AdaptedProcess y =
      ef_backward(spec, rho, AdaptedProcess(spec.lattice, std::move(pay)));
  std::vector<double> out;
  for (const NodeRef n : theta.frontier()) out.push_back(y[n]);
  return out;
}

ValueSweep value_bruteforce(const ProblemSpec& spec, const StoppingRule& theta) {
  const auto rules = rules_from(spec, theta, StoppingRule::at_terminal(spec.lattice),
                                kMaxSweepRules);
  return sweep_over(spec, theta, rules);
}

ValueSweep restricted_horizon_value(const ProblemSpec& spec, const StoppingRule& theta,
                                    const StoppingRule& cutoff) {
  if (!leq_pathwise(theta, cutoff))
    throw GuardError("restricted_horizon_value: cutoff must stop at/after theta");
  const auto rules = rules_from(spec, theta, cutoff, kMaxSweepRules);
  return sweep_over(spec, theta, rules);
}

SaddleSet extract_saddles(const ProblemSpec& spec, const StoppingRule& theta,
                          const std::vector<double>& eps_list) {
  const SolutionTriple sol = solve_rbsde(spec);
  std::vector<RulePair> eps_pairs;
  eps_pairs.reserve(eps_list.size());
  for (const double eps : eps_list) eps_pairs.push_back(eps_pair(spec, sol, theta, eps));

  RulePair star = eps_pair(spec, sol, theta, kContactTol);
  RulePair hat{first_increment_rule(theta, sol.r_plus),
               first_increment_rule(theta, sol.r_minus)};
  return {eps_list, std::move(eps_pairs), std::move(star), std::move(hat)};
}

SaddleCheck verify_saddle(const ProblemSpec& spec, const StoppingRule& theta,
                          const RulePair& pair, double tol) {
  const auto rules = rules_from(spec, theta, StoppingRule::at_terminal(spec.lattice),
                                kMaxSweepRules);
  const std::vector<double> v0 = pair_value(spec, theta, pair.tau, pair.sigma);
  const std::vector<NodeRef> frontier = theta.frontier();

  SaddleCheck check;
  auto consider = [&](double breach, bool is_tau, std::size_t rule, std::size_t k) {
    if (breach > check.worst_violation) {
      check.worst_violation = breach;
      check.witness_is_tau = is_tau;
      check.witness_rule = rule;
      check.witness_node = frontier[k];
    }
  };
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const std::vector<double> vt = pair_value(spec, theta, rules[r], pair.sigma);
    const std::vector<double> vs = pair_value(spec, theta, pair.tau, rules[r]);
    for (std::size_t k = 0; k < frontier.size(); ++k) {
      consider(vt[k] - v0[k], true, r, k);   // tau deviation may not gain
      consider(v0[k] - vs[k], false, r, k);  // sigma deviation may not save
    }
  }
  check.pass = check.worst_violation <= tol;
  return check;
}

EpsSaddleFit fit_eps_constant(const ProblemSpec& spec, const StoppingRule& theta,
                              const std::vector<double>& eps_list) {
  const SaddleSet saddles = extract_saddles(spec, theta, eps_list);
  EpsSaddleFit fit{eps_list, {}, 0.0};
  fit.violation.reserve(eps_list.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double v = verify_saddle(spec, theta, saddles.eps_pairs[i], 0.0).worst_violation;
    fit.violation.push_back(v);
    num += v * eps_list[i];
    den += eps_list[i] * eps_list[i];
  }
  if (den > 0.0) fit.c_fitted = num / den;
  return fit;
}

MaximalityReport maximality_check(const ProblemSpec& spec, const StoppingRule& theta,
                                  double tol) {
  const auto rules = rules_from(spec, theta, StoppingRule::at_terminal(spec.lattice),
                                kMaxSaddleScanRules);
  const std::size_t count = rules.size();
  const std::vector<NodeRef> frontier = theta.frontier();
  const std::size_t fsize = frontier.size();

  MaximalityReport report;
  report.rule_count = static_cast<std::int64_t>(count);
  report.barriers_jump_free = spec.barriers.jump_free();

  std::vector<double> table(count * count * fsize);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) {
      const std::vector<double> v = pair_value(spec, theta, rules[i], rules[j]);
      std::copy(v.begin(), v.end(), table.begin() + static_cast<std::ptrdiff_t>((i * count + j) * fsize));
    }
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) {
    return table[(i * count + j) * fsize + k];
  };

  const SolutionTriple sol = solve_rbsde(spec);
  const SaddleSet saddles = extract_saddles(spec, theta, {});
  const StoppingRule hat_min = rule_min(saddles.hat.tau, saddles.hat.sigma);
  const std::vector<double> since_plus = rebased_cumulative(theta, sol.r_plus);
  const std::vector<double> since_minus = rebased_cumulative(theta, sol.r_minus);
  const auto after_theta = theta.reached_mask();

  auto note = [&](std::int64_t& counter, std::size_t i, std::size_t j, const char* what) {
    if (counter++ == 0 && report.witness.empty()) {
      std::ostringstream os;
      os << "pair (tau#" << i << ", sigma#" << j << "): " << what;
      report.witness = os.str();
    }
  };

  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j) {
      bool saddle = true;
      for (std::size_t r = 0; saddle && r < count; ++r)
        for (std::size_t k = 0; k < fsize; ++k)
          if (at(r, j, k) > at(i, j, k) + tol || at(i, r, k) < at(i, j, k) - tol) {
            saddle = false;
            break;
          }
      if (!saddle) continue;
      ++report.saddle_pairs;
      const StoppingRule& tau = rules[i];
      const StoppingRule& sigma = rules[j];
      const StoppingRule delta = rule_min(tau, sigma);

      if (!leq_pathwise(delta, hat_min))
        note(report.fail_hat_bound, i, j, "stops after the hat pair");

      // reflection must be flat strictly before delta (cumulative since theta)
      const auto after_delta = delta.reached_mask();
      bool flat = true;
      const Lattice& lat = *spec.lattice;
      for (std::size_t f = 0; flat && f < after_delta.size(); ++f) {
        if (!after_theta[f] || after_delta[f]) continue;
        if (since_plus[f] > kContactTol || since_minus[f] > kContactTol) flat = false;
      }
      if (!flat) note(report.fail_flat_before, i, j, "reflection fires before the stop");

      if (classify_ef(spec, sol.y, theta, delta).cls != MartingaleClass::Martingale)
        note(report.fail_martingale, i, j, "value drifts before the stop");

      std::vector<double> pay(static_cast<std::size_t>(lat.node_count()), 0.0);
      fill_stopped_payoff(spec.barriers, tau, sigma, delta.frontier(), pay);
      for (const NodeRef n : delta.frontier())
        if (std::abs(sol.y[n] - pay[static_cast<std::size_t>(lat.index(n))]) > tol) {
          note(report.fail_stop_identity, i, j, "Y at the stop differs from the payoff");
          break;
        }

      // the stop identity pins Y to a barrier only on the branch whose rule
      // actually fires, so the star bound holds there and only there: a rule
      // cut off by the opponent's earlier stop is unconstrained
      bool star_ok = true;
      const int steps = lat.grid().steps;
      for (std::int64_t p = 0; star_ok && p < lat.width(steps); ++p) {
        const int dtau = tau.stop_depth_on_path(p);
        const int dsigma = sigma.stop_depth_on_path(p);
        if (dtau <= dsigma && dtau < steps)
          star_ok = saddles.star.tau.stop_depth_on_path(p) <= dtau;
        else if (dsigma < dtau)
          star_ok = saddles.star.sigma.stop_depth_on_path(p) <= dsigma;
      }
      if (!star_ok) note(report.fail_star_bound, i, j, "realized stop before the star pair");
    }
  return report;
}

GameReport game_verify(const ProblemSpec& spec, const StoppingRule& theta,
                       const std::vector<double>& eps_list, bool with_maximality) {
  const SolutionTriple sol = solve_rbsde(spec);
  SaddleSet saddles = extract_saddles(spec, theta, eps_list);
  const ValueSweep sweep = value_bruteforce(spec, theta);
  SaddleCheck star_check = verify_saddle(spec, theta, saddles.star);
  SaddleCheck hat_check = verify_saddle(spec, theta, saddles.hat);

  GameReport report{theta,          sweep.frontier, {},        sweep.upper,
                    sweep.lower,    std::move(saddles), star_check, hat_check,
                    std::nullopt};
  for (const NodeRef n : report.frontier) report.value_rbsde.push_back(sol.y[n]);
  if (with_maximality) report.maximality = maximality_check(spec, theta);
  return report;
}

}  // namespace dgl
