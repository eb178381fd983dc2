#include "dgl/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dgl {

namespace {

double solve_implicit(double a, double t, double z, const Driver& f, double dt,
                      double forcing) {
  if (f.mono_y * dt >= 1.0)
    throw GuardError("step-size guard violated: mono_y * dt >= 1");
  if (!std::isfinite(a) || !std::isfinite(z))
    throw NumericError("implicit step fed a non-finite input");
  if (f.affine)  // y = a + (ay*y + bz*z + c0)*dt + forcing
    return (a + (f.bz * z + f.c0) * dt + forcing) / (1.0 - f.ay * dt);

  const double target = a + forcing;
  const double atol = 1e-13 * (1.0 + std::abs(a));
  auto h = [&](double y) { return y - f(t, y, z) * dt; };

  double w = 1.0 + 0.5 * std::abs(target);
  double lo = target - w, hi = target + w;
  for (int i = 0; h(lo) > target; ++i) {
    if (i >= 1000) throw NumericError("implicit step diverged while bracketing from below");
    lo -= w;
    w *= 2.0;
  }
  w = 1.0 + 0.5 * std::abs(target);
  for (int i = 0; h(hi) < target; ++i) {
    if (i >= 1000) throw NumericError("implicit step diverged while bracketing from above");
    hi += w;
    w *= 2.0;
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 300; ++i) {
    mid = 0.5 * (lo + hi);
    const double r = h(mid) - target;
    if (std::abs(r) <= atol) return mid;
    (r < 0.0 ? lo : hi) = mid;
    if (hi - lo <= 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(mid)))
      break;  // double-precision floor; residual is as small as representable
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double implicit_step(double a, double t, double z, const Driver& driver, double dt,
                     double forcing_increment) {
  return solve_implicit(a, t, z, driver, dt, forcing_increment);
}

std::vector<double> forcing_increments(const ProblemSpec& spec) {
  const Lattice& lat = *spec.lattice;
  std::vector<double> dv(static_cast<std::size_t>(lat.node_count()), 0.0);
  if (!spec.forcing) return dv;
  const AdaptedProcess& v = *spec.forcing;
  for (int d = 0; d < lat.steps(); ++d)
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef n{d, p};
      dv[static_cast<std::size_t>(lat.index(n))] =
          0.5 * (v[lat.child_up(n)] + v[lat.child_down(n)]) - v[n];
    }
  return dv;
}

BsdePair solve_bsde(const ProblemSpec& spec) {
  return solve_bsde(spec, spec.barriers.terminal_values());
}

BsdePair solve_bsde(const ProblemSpec& spec, const std::vector<double>& terminal) {
  spec.validate();
  const Lattice& lat = *spec.lattice;
  const int n = lat.steps();
  if (static_cast<std::int64_t>(terminal.size()) != lat.width(n))
    throw Error("solve_bsde: terminal size does not match leaf count");
  const double dt = lat.dt();
  const double s2 = 2.0 * lat.sqrt_dt();
  const auto dv = forcing_increments(spec);

  std::vector<double> y(static_cast<std::size_t>(lat.node_count()));
  std::vector<double> z(static_cast<std::size_t>(lat.node_count()), 0.0);
  for (std::int64_t p = 0; p < lat.width(n); ++p)
    y[static_cast<std::size_t>(lat.index({n, p}))] = terminal[static_cast<std::size_t>(p)];
  for (int d = n - 1; d >= 0; --d) {
    const double t = lat.grid().time(d);
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      const auto i = static_cast<std::size_t>(lat.index(node));
      const double yu = y[static_cast<std::size_t>(lat.index(lat.child_up(node)))];
      const double yd = y[static_cast<std::size_t>(lat.index(lat.child_down(node)))];
      z[i] = (yu - yd) / s2;
      y[i] = solve_implicit(0.5 * (yu + yd), t, z[i], spec.driver, dt, dv[i]);
    }
  }
  return {AdaptedProcess(spec.lattice, std::move(y)), AdaptedProcess(spec.lattice, std::move(z))};
}

AdaptedProcess ef_backward(const ProblemSpec& spec, const StoppingRule& stop,
                           const AdaptedProcess& payoff) {
  spec.validate();
  if (stop.lattice_ptr() != spec.lattice || payoff.lattice_ptr() != spec.lattice)
    throw Error("ef_backward: lattice mismatch");
  const Lattice& lat = *spec.lattice;
  if (lat.kind() != TreeKind::FullBinary)
    throw GuardError("ef_backward needs a FullBinary lattice");
  const int n = lat.steps();
  const double dt = lat.dt();
  const double s2 = 2.0 * lat.sqrt_dt();
  const auto dv = forcing_increments(spec);
  const auto reached = stop.reached_mask();

  std::vector<double> y(static_cast<std::size_t>(lat.node_count()));
  // forward: freeze the frontier payoff along each stopped path
  for (int d = 0; d <= n; ++d)
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      const auto i = static_cast<std::size_t>(lat.index(node));
      if (!reached[i]) continue;
      y[i] = stop.stops_at(node) ? payoff[node]
                                 : y[static_cast<std::size_t>(lat.index(lat.parent(node)))];
    }
  // backward: implicit steps strictly before the frontier
  for (int d = n - 1; d >= 0; --d) {
    const double t = lat.grid().time(d);
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      const auto i = static_cast<std::size_t>(lat.index(node));
      if (reached[i]) continue;
      const double yu = y[static_cast<std::size_t>(lat.index(lat.child_up(node)))];
      const double yd = y[static_cast<std::size_t>(lat.index(lat.child_down(node)))];
      y[i] = solve_implicit(0.5 * (yu + yd), t, (yu - yd) / s2, spec.driver, dt, dv[i]);
    }
  }
  return AdaptedProcess(spec.lattice, std::move(y));
}

std::vector<double> nonlinear_expectation(const ProblemSpec& spec, const StoppingRule& stop,
                                          const AdaptedProcess& payoff,
                                          const StoppingRule& observe_at) {
  if (!leq_pathwise(observe_at, stop))
    throw GuardError("nonlinear_expectation: observe_at must stop at/before stop pathwise");
  const AdaptedProcess y = ef_backward(spec, stop, payoff);
  std::vector<double> out;
  for (const NodeRef n : observe_at.frontier()) out.push_back(y[n]);
  return out;
}

ClassifyResult classify_ef(const ProblemSpec& spec, const AdaptedProcess& x,
                           const StoppingRule& from, const StoppingRule& to, double tol) {
  spec.validate();
  if (x.lattice_ptr() != spec.lattice) throw Error("classify_ef: lattice mismatch");
  if (!leq_pathwise(from, to))
    throw GuardError("classify_ef: `from` must stop at/before `to` pathwise");
  const Lattice& lat = *spec.lattice;
  const double dt = lat.dt();
  const double s2 = 2.0 * lat.sqrt_dt();
  const auto dv = forcing_increments(spec);
  const auto in_from = from.reached_mask();
  const auto in_to = to.reached_mask();

  ClassifyResult r;
  r.empty_region = true;
  for (int d = 0; d < lat.steps(); ++d) {
    const double t = lat.grid().time(d);
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      const auto i = static_cast<std::size_t>(lat.index(node));
      if (!in_from[i] || in_to[i]) continue;
      r.empty_region = false;
      const double xu = x[lat.child_up(node)];
      const double xd = x[lat.child_down(node)];
      const double pred =
          solve_implicit(0.5 * (xu + xd), t, (xu - xd) / s2, spec.driver, dt, dv[i]);
      const double g = x[node] - pred;
      if (g > r.max_up) {
        r.max_up = g;
        r.witness_up = node;
      }
      if (-g > r.max_down) {
        r.max_down = -g;
        r.witness_down = node;
      }
    }
  }
  const bool up = r.max_up > tol, down = r.max_down > tol;
  r.cls = up && down ? MartingaleClass::Neither
          : up       ? MartingaleClass::Supermartingale
          : down     ? MartingaleClass::Submartingale
                     : MartingaleClass::Martingale;
  return r;
}

StrictComparisonResult strict_comparison_check(const ProblemSpec& spec,
                                               const std::vector<double>& xi1,
                                               const std::vector<double>& xi2,
                                               const StoppingRule& sigma, double tol) {
  const Lattice& lat = *spec.lattice;
  const int n = lat.steps();
  if (static_cast<std::int64_t>(xi1.size()) != lat.width(n) || xi1.size() != xi2.size())
    throw Error("strict_comparison_check: terminal size mismatch");
  for (std::size_t p = 0; p < xi1.size(); ++p)
    if (xi1[p] < xi2[p]) throw Error("strict_comparison_check: needs xi1 >= xi2 leafwise");
  const BsdePair s1 = solve_bsde(spec, xi1);
  const BsdePair s2 = solve_bsde(spec, xi2);
  const auto after_sigma = sigma.reached_mask();

  StrictComparisonResult res;
  for (int d = 0; d <= n; ++d)
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      const auto i = static_cast<std::size_t>(lat.index(node));
      // at/before sigma = not strictly after its frontier
      if (after_sigma[i] && !sigma.stops_at(node)) continue;
      const double gap = s1.y[node] - s2.y[node];
      if (std::abs(gap) > tol) continue;
      // equal values here must force equal terminal data below
      const std::int64_t lo = p << (n - d), hi = (p + 1) << (n - d);
      for (std::int64_t leaf = lo; leaf < hi; ++leaf) {
        const double tgap = xi1[static_cast<std::size_t>(leaf)] - xi2[static_cast<std::size_t>(leaf)];
        if (std::abs(tgap) > tol) {
          res.holds = false;
          res.node = node;
          res.leaf_pos = leaf;
          res.value_gap = gap;
          res.terminal_gap = tgap;
          return res;
        }
      }
    }
  return res;
}

}  // namespace dgl
