#include "dgl/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dgl/game.hpp"

namespace dgl {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Terminal data defaulted to the walk's endpoint, clamped into the band.
std::vector<double> clamped_walk_terminal(const LatticePtr& lat,
                                          const AdaptedProcess& lower,
                                          const AdaptedProcess& upper) {
  const int n = lat->steps();
  std::vector<double> xi(static_cast<std::size_t>(lat->width(n)));
  for (std::int64_t p = 0; p < lat->width(n); ++p) {
    const NodeRef leaf{n, p};
    xi[static_cast<std::size_t>(p)] =
        std::clamp(lat->brownian(leaf), lower[leaf], upper[leaf]);
  }
  return xi;
}

}  // namespace

ThresholdReport gamma_threshold(const BarrierPair& barriers, const StoppingRule& theta,
                                double tol) {
  if (!(tol > 0.0)) throw GuardError("gamma_threshold: tolerance must be positive");
  const LatticePtr& lat = barriers.lattice_ptr();
  if (theta.lattice_ptr() != lat) throw Error("gamma_threshold: lattice mismatch");
  const int n = lat->steps();
  const AdaptedProcess& lower = barriers.lower();
  const AdaptedProcess& upper = barriers.upper();
  const auto reached = theta.reached_mask();

  auto gap = [&](NodeRef node) { return upper[node] - lower[node]; };
  auto meets_at = [&](NodeRef node) { return gap(node) <= tol; };
  auto meets_left = [&](NodeRef node) {  // parent values meet, strictly after theta
    if (node.depth == 0) return false;
    const NodeRef par = lat->parent(node);
    return reached[static_cast<std::size_t>(lat->index(par))] && meets_at(par);
  };
  const NodeMask trigger = NodeMask::from(
      lat, [&](NodeRef node) { return meets_at(node) || meets_left(node); });

  ThresholdReport report{theta, first_hitting_rule(theta, trigger), {}, {}};
  report.meet_kind.resize(static_cast<std::size_t>(lat->width(n)));
  report.min_gap.resize(static_cast<std::size_t>(lat->width(n)));
  for (std::int64_t p = 0; p < lat->width(n); ++p) {
    const NodeRef stop = report.gamma.stop_node_on_path(p);
    MeetKind kind = MeetKind::NoMeet;
    if (meets_at(stop))
      kind = MeetKind::AtMeet;
    else if (meets_left(stop))
      kind = MeetKind::LeftMeet;
    report.meet_kind[static_cast<std::size_t>(p)] = kind;
    double mg = gap({n, p});
    for (int d = 0; d < n; ++d) mg = std::min(mg, gap({d, p >> (n - d)}));
    report.min_gap[static_cast<std::size_t>(p)] = mg;
  }
  return report;
}

ThresholdDiagnostics threshold_diagnostics(const ProblemSpec& spec,
                                           const StoppingRule& theta, double eps,
                                           double gap_tol) {
  const LatticePtr& lat = spec.lattice;
  const int n = lat->steps();
  const SolutionTriple sol = solve_rbsde(spec);
  const SaddleSet saddles = extract_saddles(spec, theta, {eps});

  ThresholdDiagnostics diag{gamma_threshold(spec.barriers, theta, gap_tol),
                            {}, {}, {}, {}, {}, {}, {}, {}};
  const std::int64_t leaves = lat->width(n);
  diag.gamma_depth.resize(static_cast<std::size_t>(leaves));
  diag.tau_hat_depth.resize(static_cast<std::size_t>(leaves));
  diag.sigma_hat_depth.resize(static_cast<std::size_t>(leaves));
  diag.tau_eps_depth.resize(static_cast<std::size_t>(leaves));
  diag.sigma_eps_depth.resize(static_cast<std::size_t>(leaves));
  diag.check_a.resize(static_cast<std::size_t>(leaves));
  diag.check_b.resize(static_cast<std::size_t>(leaves));
  diag.check_c.resize(static_cast<std::size_t>(leaves));

  const AdaptedProcess& lower = spec.barriers.lower();
  const AdaptedProcess& upper = spec.barriers.upper();
  const int quarter_start = (3 * n + 3) / 4;  // smallest d with 4d >= 3n
  for (std::int64_t p = 0; p < leaves; ++p) {
    const auto i = static_cast<std::size_t>(p);
    const int gd = diag.threshold.gamma.stop_depth_on_path(p);
    diag.gamma_depth[i] = gd;
    diag.tau_hat_depth[i] = saddles.hat.tau.stop_depth_on_path(p);
    diag.sigma_hat_depth[i] = saddles.hat.sigma.stop_depth_on_path(p);
    diag.tau_eps_depth[i] = saddles.eps_pairs[0].tau.stop_depth_on_path(p);
    diag.sigma_eps_depth[i] = saddles.eps_pairs[0].sigma.stop_depth_on_path(p);

    // (a) an early gamma must sit on an actual meet (node or parent values)
    bool a = true;
    if (gd < n) a = diag.threshold.meet_kind[i] != MeetKind::NoMeet;
    // (b) eps-rules never outlive gamma: once the barriers meet within the gap
    // tolerance, Y is pinched within any eps > tolerance of both, so both
    // eps-rules have fired. Reflection-increment rules carry no such bound (a
    // side that never reflects runs to the horizon), so the hat depths next to
    // this are reported but not asserted.
    const bool b = diag.tau_eps_depth[i] <= gd && diag.sigma_eps_depth[i] <= gd;
    // (c) still-separated paths see one-sided reflection near the horizon
    bool c = true;
    const NodeRef near_end{n - 1, p >> 1};
    if (upper[near_end] - lower[near_end] > gap_tol) {
      double moved_plus = 0.0, moved_minus = 0.0;
      for (int d = quarter_start; d < n; ++d) {
        const NodeRef node{d, p >> (n - d)};
        moved_plus += sol.r_plus[node];
        moved_minus += sol.r_minus[node];
      }
      c = !(moved_plus > kContactTol && moved_minus > kContactTol);
    }
    diag.check_a[i] = a;
    diag.check_b[i] = b;
    diag.check_c[i] = c;
    diag.pass_a = diag.pass_a && a;
    diag.pass_b = diag.pass_b && b;
    diag.pass_c = diag.pass_c && c;
  }
  return diag;
}

BarrierPair generate_barrier_family(const std::string& name, const LatticePtr& lattice,
                                    const std::vector<double>& params) {
  if (!lattice) throw Error("generate_barrier_family needs a lattice");
  auto need = [&](std::size_t lo, std::size_t hi, const char* usage) {
    if (params.size() < lo || params.size() > hi)
      throw Error("barrier family '" + name + "' takes params " + usage);
  };
  auto band_around_walk = [&](const std::function<double(NodeRef)>& gap_at,
                              bool jump_free) {
    std::vector<double> lo(static_cast<std::size_t>(lattice->node_count()));
    std::vector<double> hi(lo.size());
    for (int d = 0; d <= lattice->steps(); ++d)
      for (std::int64_t p = 0; p < lattice->width(d); ++p) {
        const NodeRef node{d, p};
        const auto i = static_cast<std::size_t>(lattice->index(node));
        const double half = 0.5 * gap_at(node);
        lo[i] = lattice->brownian(node) - half;
        hi[i] = lattice->brownian(node) + half;
      }
    AdaptedProcess lower(lattice, std::move(lo));
    AdaptedProcess upper(lattice, std::move(hi));
    std::vector<double> xi = clamped_walk_terminal(lattice, lower, upper);
    return BarrierPair(std::move(lower), std::move(upper), std::move(xi), jump_free);
  };

  if (name == "separated") {
    need(1, 1, "[delta] with delta > 0");
    const double delta = params[0];
    if (!(delta > 0.0)) throw Error("barrier family 'separated' needs delta > 0");
    return band_around_walk([&](NodeRef) { return delta; }, true);
  }
  if (name == "closing_gap") {
    need(1, 2, "[t0] or [t0, slope]");
    const double t0 = params[0];
    const double slope = params.size() > 1 ? params[1] : 0.05;
    if (!(slope >= 0.0)) throw Error("barrier family 'closing_gap' needs slope >= 0");
    std::vector<double> lo(static_cast<std::size_t>(lattice->node_count()));
    std::vector<double> hi(lo.size());
    for (int d = 0; d <= lattice->steps(); ++d) {
      const double t = lattice->grid().time(d);
      const double level = -std::max(t0 - t, 0.0) - slope * std::max(t - t0, 0.0);
      for (std::int64_t p = 0; p < lattice->width(d); ++p) {
        const auto i = static_cast<std::size_t>(lattice->index({d, p}));
        lo[i] = level;
        hi[i] = -level;
      }
    }
    AdaptedProcess lower(lattice, std::move(lo));
    AdaptedProcess upper(lattice, std::move(hi));
    std::vector<double> xi = clamped_walk_terminal(lattice, lower, upper);
    return BarrierPair(std::move(lower), std::move(upper), std::move(xi), true);
  }
  if (name == "touching") {
    need(2, 2, "[delta, stride]");
    const double delta = params[0];
    const int stride = static_cast<int>(params[1]);
    if (!(delta > 0.0) || stride < 1 || params[1] != stride)
      throw Error("barrier family 'touching' needs delta > 0 and integer stride >= 1");
    return band_around_walk(
        [&](NodeRef n) { return n.depth > 0 && n.depth % stride == 0 ? 0.0 : delta; },
        false);
  }
  if (name == "sampled_rough") {
    need(2, 2, "[eps0, seed]");
    const double eps0 = params[0];
    const auto seed = static_cast<std::uint64_t>(params[1]);
    if (!(eps0 > 0.0)) throw Error("barrier family 'sampled_rough' needs eps0 > 0");
    // auxiliary hashed-sign walk: a fixed rough profile, independent of B
    std::vector<double> w(static_cast<std::size_t>(lattice->node_count()), 0.0);
    for (int d = 1; d <= lattice->steps(); ++d)
      for (std::int64_t p = 0; p < lattice->width(d); ++p) {
        const NodeRef node{d, p};
        const double step = mix64(seed ^ mix64((static_cast<std::uint64_t>(d) << 40) ^
                                               static_cast<std::uint64_t>(p))) &
                                    1
                                ? lattice->sqrt_dt()
                                : -lattice->sqrt_dt();
        const std::int64_t par = lattice->kind() == TreeKind::FullBinary
                                     ? lattice->index(lattice->parent(node))
                                     : lattice->index({d - 1, std::min(p, lattice->width(d - 1) - 1)});
        w[static_cast<std::size_t>(lattice->index(node))] =
            w[static_cast<std::size_t>(par)] + step;
      }
    return band_around_walk(
        [&](NodeRef n) {
          return std::max(eps0, std::abs(w[static_cast<std::size_t>(lattice->index(n))]));
        },
        false);
  }
  throw Error("unknown barrier family '" + name +
              "' (known: separated, closing_gap, touching, sampled_rough)");
}

}  // namespace dgl
