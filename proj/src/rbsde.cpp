#include "dgl/rbsde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace dgl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Root of the increasing map h on a bracket grown geometrically; same policy
// as the unpenalized solver (residual 1e-13*(1+|a|), capped expansion).
template <class H>
double bisect_increasing(const H& h, double target, double around, double atol) {
  double w = 1.0 + 0.5 * std::abs(around);
  double lo = around - w, hi = around + w;
  for (int i = 0; h(lo) > target; ++i) {
    if (i >= 1000) throw NumericError("penalized step diverged while bracketing from below");
    lo -= w;
    w *= 2.0;
  }
  w = 1.0 + 0.5 * std::abs(around);
  for (int i = 0; h(hi) < target; ++i) {
    if (i >= 1000) throw NumericError("penalized step diverged while bracketing from above");
    hi += w;
    w *= 2.0;
  }
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double r = h(mid) - target;
    if (std::abs(r) <= atol) return mid;
    (r < 0.0 ? lo : hi) = mid;
    if (hi - lo <= 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(mid)))
      break;
  }
  return 0.5 * (lo + hi);
}

// One node of the combined penalized/reflected scheme:
//   y = a + [f + n(y-lpen)^- - n(y-upen)^+] dt + dv + drp - drm,  lref <= y <= uref,
// complementarity on the reflected sides. +-inf sentinels disable any bound.
ReflectedStep step_core(double a, double t, double z, const Driver& f, double dt,
                        double dv, double n, double lpen, double upen, double lref,
                        double uref) {
  const bool pen_l = std::isfinite(lpen), pen_u = std::isfinite(upen);
  const double target = a + dv;
  auto h = [&](double y) {  // y - f_pen(t,y,z)*dt, strictly increasing
    double v = f(t, y, z);
    if (pen_l && y < lpen) v += n * (lpen - y);
    if (pen_u && y > upen) v -= n * (y - upen);
    return y - v * dt;
  };

  double y0;
  if (!pen_l && !pen_u) {
    y0 = implicit_step(a, t, z, f, dt, dv);
  } else if (f.affine) {
    // piecewise-affine in y: pick the branch by the unpenalized root
    const double A = a + (f.bz * z + f.c0) * dt + dv;
    const double mid = A / (1.0 - f.ay * dt);
    if (pen_l && mid < lpen)
      y0 = (A + n * lpen * dt) / (1.0 - f.ay * dt + n * dt);
    else if (pen_u && mid > upen)
      y0 = (A + n * upen * dt) / (1.0 - f.ay * dt + n * dt);
    else
      y0 = mid;
  } else {
    if (f.mono_y * dt >= 1.0)
      throw GuardError("step-size guard violated: mono_y * dt >= 1");
    y0 = bisect_increasing(h, target, target, 1e-13 * (1.0 + std::abs(a)));
  }

  if (y0 < lref) return {lref, std::max(h(lref) - target, 0.0), 0.0};
  if (y0 > uref) return {uref, 0.0, std::max(target - h(uref), 0.0)};
  return {y0, 0.0, 0.0};
}

struct Sweep {
  std::vector<double> y, z, rp, rm;
};

// Shared backward engine; reflection and penalty sides are switched on by the
// callers below. Works on both tree kinds.
Sweep backward_sweep(const ProblemSpec& spec, double n, bool pen_lower, bool pen_upper,
                     bool ref_lower, bool ref_upper) {
  spec.validate();
  const Lattice& lat = *spec.lattice;
  const int steps = lat.steps();
  const double dt = lat.dt();
  const double s2 = 2.0 * lat.sqrt_dt();
  const auto dv = forcing_increments(spec);
  const AdaptedProcess& lower = spec.barriers.lower();
  const AdaptedProcess& upper = spec.barriers.upper();

  Sweep out;
  const auto count = static_cast<std::size_t>(lat.node_count());
  out.y.resize(count);
  out.z.assign(count, 0.0);
  out.rp.assign(count, 0.0);
  out.rm.assign(count, 0.0);
  for (std::int64_t p = 0; p < lat.width(steps); ++p)
    out.y[static_cast<std::size_t>(lat.index({steps, p}))] =
        spec.barriers.terminal(p);
  for (int d = steps - 1; d >= 0; --d) {
    const double t = lat.grid().time(d);
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      const auto i = static_cast<std::size_t>(lat.index(node));
      const double yu = out.y[static_cast<std::size_t>(lat.index(lat.child_up(node)))];
      const double yd = out.y[static_cast<std::size_t>(lat.index(lat.child_down(node)))];
      out.z[i] = (yu - yd) / s2;
      const double l = lower.at_flat(static_cast<std::int64_t>(i));
      const double u = upper.at_flat(static_cast<std::int64_t>(i));
      const ReflectedStep rs =
          step_core(0.5 * (yu + yd), t, out.z[i], spec.driver, dt, dv[i], n,
                    pen_lower ? l : -kInf, pen_upper ? u : kInf,
                    ref_lower ? l : -kInf, ref_upper ? u : kInf);
      out.y[i] = rs.y;
      out.rp[i] = rs.dr_plus;
      out.rm[i] = rs.dr_minus;
    }
  }
  return out;
}

SolutionTriple to_triple(const LatticePtr& lat, Sweep&& s) {
  return {AdaptedProcess(lat, std::move(s.y)), AdaptedProcess(lat, std::move(s.z)),
          AdaptedProcess(lat, std::move(s.rp)), AdaptedProcess(lat, std::move(s.rm))};
}

}  // namespace

ReflectedStep reflected_step(double a, double t, double z, const Driver& driver,
                             double dt, double forcing, double l, double u) {
  if (l > u) throw GuardError("reflected_step: lower bound exceeds upper bound");
  if (driver.mono_y * dt >= 1.0)
    throw GuardError("step-size guard violated: mono_y * dt >= 1");
  if (!std::isfinite(a) || !std::isfinite(z))
    throw NumericError("reflected step fed a non-finite input");
  return step_core(a, t, z, driver, dt, forcing, 0.0, -kInf, kInf, l, u);
}

SolutionTriple solve_rbsde(const ProblemSpec& spec) {
  return to_triple(spec.lattice, backward_sweep(spec, 0.0, false, false, true, true));
}

SolutionTriple solve_one_barrier(const ProblemSpec& spec, BarrierSide side) {
  const bool lower = side == BarrierSide::Lower;
  return to_triple(spec.lattice, backward_sweep(spec, 0.0, false, false, lower, !lower));
}

BsdePair solve_penalized(const ProblemSpec& spec, double n, PenaltyScheme scheme) {
  if (!(n >= 0.0)) throw GuardError("solve_penalized: penalty weight must be nonnegative");
  Sweep s;
  switch (scheme) {
    case PenaltyScheme::TwoSided:
      s = backward_sweep(spec, n, true, true, false, false);
      break;
    case PenaltyScheme::LowerOnly:
      s = backward_sweep(spec, n, true, false, false, true);
      break;
    case PenaltyScheme::UpperOnly:
      s = backward_sweep(spec, n, false, true, true, false);
      break;
  }
  return {AdaptedProcess(spec.lattice, std::move(s.y)),
          AdaptedProcess(spec.lattice, std::move(s.z))};
}

std::vector<PenaltyRow> penalty_study(const ProblemSpec& spec,
                                      const std::vector<double>& n_values) {
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (!(n_values[i] >= 0.0))
      throw GuardError("penalty_study: penalty weights must be nonnegative");
    if (i > 0 && !(n_values[i] > n_values[i - 1]))
      throw GuardError("penalty_study: penalty weights must be increasing");
  }
  const SolutionTriple ref = solve_rbsde(spec);
  const std::size_t count = ref.y.values().size();

  std::vector<PenaltyRow> rows;
  std::vector<double> prev_lower, prev_upper;
  double prev_err = 0.0;
  for (const double n : n_values) {
    const auto t0 = std::chrono::steady_clock::now();
    const BsdePair two = solve_penalized(spec, n, PenaltyScheme::TwoSided);
    const BsdePair low = solve_penalized(spec, n, PenaltyScheme::LowerOnly);
    const BsdePair up = solve_penalized(spec, n, PenaltyScheme::UpperOnly);
    const auto t1 = std::chrono::steady_clock::now();

    PenaltyRow row;
    row.n = n;
    for (std::size_t i = 0; i < count; ++i)
      row.sup_error = std::max(
          row.sup_error, std::abs(two.y.values()[i] - ref.y.values()[i]));
    if (!rows.empty()) {
      for (std::size_t i = 0; i < count; ++i) {
        if (low.y.values()[i] < prev_lower[i] - 1e-12) row.lower_monotone = false;
        if (up.y.values()[i] > prev_upper[i] + 1e-12) row.upper_monotone = false;
      }
      row.err_monotone = row.sup_error <= prev_err + 1e-12;
    }
    row.runtime_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0)
            .count();
    prev_lower = low.y.values();
    prev_upper = up.y.values();
    prev_err = row.sup_error;
    rows.push_back(row);
  }
  return rows;
}

SolutionAudit audit_solution(const ProblemSpec& spec, const SolutionTriple& sol,
                             bool lower_active, bool upper_active) {
  spec.validate();
  const Lattice& lat = *spec.lattice;
  const int steps = lat.steps();
  const double dt = lat.dt();
  const double s2 = 2.0 * lat.sqrt_dt();
  const auto dv = forcing_increments(spec);
  const AdaptedProcess& lower = spec.barriers.lower();
  const AdaptedProcess& upper = spec.barriers.upper();

  SolutionAudit audit;
  auto flag = [&](bool bad) {
    if (bad) ++audit.violations;
    return bad;
  };
  for (std::int64_t p = 0; p < lat.width(steps); ++p) {
    const NodeRef leaf{steps, p};
    flag(sol.y[leaf] != spec.barriers.terminal(p));
    flag(sol.r_plus[leaf] != 0.0 || sol.r_minus[leaf] != 0.0);
  }
  for (int d = 0; d < steps; ++d) {
    const double t = lat.grid().time(d);
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      const auto i = static_cast<std::size_t>(lat.index(node));
      const double y = sol.y[node];
      const double drp = sol.r_plus[node], drm = sol.r_minus[node];

      if (lower_active) {
        const double breach = lower[node] - y;
        audit.max_bound_breach = std::max(audit.max_bound_breach, breach);
        flag(breach > 0.0);
      }
      if (upper_active) {
        const double breach = y - upper[node];
        audit.max_bound_breach = std::max(audit.max_bound_breach, breach);
        flag(breach > 0.0);
      }
      flag(drp < 0.0 || drm < 0.0);
      if (flag(drp != 0.0 && drm != 0.0)) audit.complementarity_ok = false;
      if (drp > 0.0) {
        const double gap = std::abs(y - lower[node]);
        audit.max_contact_gap = std::max(audit.max_contact_gap, gap);
        flag(gap > kContactTol);
      }
      if (drm > 0.0) {
        const double gap = std::abs(upper[node] - y);
        audit.max_contact_gap = std::max(audit.max_contact_gap, gap);
        flag(gap > kContactTol);
      }

      const double yu = sol.y[lat.child_up(node)];
      const double yd = sol.y[lat.child_down(node)];
      const double z = (yu - yd) / s2;
      const double step = implicit_step(0.5 * (yu + yd), t, z, spec.driver, dt,
                                        dv[i] + drp - drm);
      const double residual = std::abs(y - step);
      audit.max_step_residual = std::max(audit.max_step_residual, residual);
      flag(residual > kStepResidualTol);
      flag(std::abs(sol.z[node] - z) > kStepResidualTol);
    }
  }
  return audit;
}

AdaptedProcess cumulative_along_paths(const AdaptedProcess& increments) {
  const Lattice& lat = increments.lattice();
  if (lat.kind() != TreeKind::FullBinary)
    throw GuardError("cumulative_along_paths needs a FullBinary lattice");
  std::vector<double> c(static_cast<std::size_t>(lat.node_count()));
  c[0] = increments.at_flat(0);
  for (int d = 1; d <= lat.steps(); ++d)
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      c[static_cast<std::size_t>(lat.index(node))] =
          c[static_cast<std::size_t>(lat.index(lat.parent(node)))] + increments[node];
    }
  return AdaptedProcess(increments.lattice_ptr(), std::move(c));
}

ProblemSpec exp_rescale(const ProblemSpec& spec, double a) {
  spec.validate();
  const LatticePtr& lat = spec.lattice;
  const double dt = lat->dt();
  const double g = std::exp(a * dt);

  const Driver& base = spec.driver;
  Driver scaled;
  scaled.label = base.label + "*e^{at}";
  scaled.eval = [base, a, dt](double t, double y, double z) {
    const double s = std::exp(a * (t + dt));
    return s * base.eval(t, std::exp(-a * t) * y, z / s) +
           ((1.0 - std::exp(a * dt)) / dt) * y;
  };
  scaled.lip_z = base.lip_z;
  scaled.mono_y = g * base.mono_y + (1.0 - g) / dt;
  scaled.affine = base.affine && base.c0 == 0.0;
  if (scaled.affine) {
    scaled.ay = g * base.ay + (1.0 - g) / dt;
    scaled.bz = base.bz;
    scaled.c0 = 0.0;
  }

  auto scale_nodewise = [&](const AdaptedProcess& x) {
    std::vector<double> v(static_cast<std::size_t>(lat->node_count()));
    for (int d = 0; d <= lat->steps(); ++d) {
      const double s = std::exp(a * lat->grid().time(d));
      for (std::int64_t p = 0; p < lat->width(d); ++p) {
        const auto i = lat->index({d, p});
        v[static_cast<std::size_t>(i)] = s * x.at_flat(i);
      }
    }
    return AdaptedProcess(lat, std::move(v));
  };
  std::vector<double> terminal = spec.barriers.terminal_values();
  const double sT = std::exp(a * lat->grid().horizon);
  for (double& x : terminal) x *= sT;

  ProblemSpec out{lat, std::move(scaled),
                  BarrierPair(scale_nodewise(spec.barriers.lower()),
                              scale_nodewise(spec.barriers.upper()), std::move(terminal),
                              spec.barriers.jump_free()),
                  std::nullopt};
  if (spec.forcing) {
    if (lat->kind() != TreeKind::FullBinary)
      throw GuardError("exp_rescale with forcing needs a FullBinary lattice");
    // rebuild the cumulative process so each increment picks up the
    // child-time factor e^{a t_{k+1}}
    const AdaptedProcess& v = *spec.forcing;
    std::vector<double> w(static_cast<std::size_t>(lat->node_count()), 0.0);
    for (int d = 1; d <= lat->steps(); ++d) {
      const double s = std::exp(a * lat->grid().time(d));
      for (std::int64_t p = 0; p < lat->width(d); ++p) {
        const NodeRef node{d, p};
        const NodeRef par = lat->parent(node);
        w[static_cast<std::size_t>(lat->index(node))] =
            w[static_cast<std::size_t>(lat->index(par))] + s * (v[node] - v[par]);
      }
    }
    out.forcing = AdaptedProcess(lat, std::move(w));
  }
  return out;
}

RescaleCheck change_of_variable_check(const ProblemSpec& spec, double a, double tol) {
  const SolutionTriple base = solve_rbsde(spec);
  const SolutionTriple scaled = solve_rbsde(exp_rescale(spec, a));
  const Lattice& lat = *spec.lattice;

  RescaleCheck check;
  for (int d = 0; d <= lat.steps(); ++d) {
    const double s = std::exp(a * lat.grid().time(d));
    const double sz = std::exp(a * lat.grid().time(std::min(d + 1, lat.steps())));
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef node{d, p};
      check.max_error_y =
          std::max(check.max_error_y, std::abs(scaled.y[node] - s * base.y[node]));
      check.max_error_z =
          std::max(check.max_error_z, std::abs(scaled.z[node] - sz * base.z[node]));
    }
  }
  check.pass = check.max_error_y <= tol;
  return check;
}

}  // namespace dgl
