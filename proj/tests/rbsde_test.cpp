#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "dgl/rbsde.hpp"
#include "dgl/threshold.hpp"
#include "doctest.h"

using namespace dgl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LatticePtr full(int steps) { return build_lattice({1.0, steps}, TreeKind::FullBinary); }

Driver linear(double a, double b, double c) {
  std::array<double, 3> p{a, b, c};
  return make_preset_driver("linear", p);
}

std::vector<double> walk_terminal(const LatticePtr& lat) {
  const int n = lat->steps();
  std::vector<double> xi(static_cast<std::size_t>(lat->width(n)));
  for (std::int64_t p = 0; p < lat->width(n); ++p)
    xi[static_cast<std::size_t>(p)] = lat->brownian({n, p});
  return xi;
}

// 3 steps, band of half-width 1 around the walk, terminal = walk
ProblemSpec band_instance() {
  auto lat = full(3);
  return {lat, linear(-1, 0.5, 0), generate_barrier_family("separated", lat, {2.0}),
          std::nullopt};
}

// constant barrier level at every non-terminal node, released at the leaf row
// so terminal data outside the level stays admissible
AdaptedProcess barrier_until_horizon(const LatticePtr& lat, double level, double leaf_level) {
  std::vector<double> v(static_cast<std::size_t>(lat->node_count()), level);
  for (std::int64_t p = 0; p < lat->width(lat->steps()); ++p)
    v[static_cast<std::size_t>(lat->index({lat->steps(), p}))] = leaf_level;
  return {lat, std::move(v)};
}

// one step with a unit band at the root only; terminal data 2 sits far inside
// the leaf band, so the root solve sees a = 2 against [0, 1]
ProblemSpec one_step_band() {
  auto lat = full(1);
  std::vector<double> lo{0, -10, -10}, hi{1, 10, 10};
  return {lat, make_preset_driver("zero", {}),
          BarrierPair(AdaptedProcess(lat, std::move(lo)), AdaptedProcess(lat, std::move(hi)),
                      {2.0, 2.0}),
          std::nullopt};
}

}  // namespace

TEST_CASE("reflected_step resolves the one-step complementarity problem") {
  auto zero = make_preset_driver("zero", {});

  auto clamped = reflected_step(5.0, 0.0, 0.0, zero, 1.0, 0.0, 0.0, 1.0);
  CHECK(clamped.y == 1.0);
  CHECK(clamped.dr_plus == 0.0);
  CHECK(clamped.dr_minus == doctest::Approx(4.0));

  auto interior = reflected_step(0.5, 0.0, 0.0, zero, 1.0, 0.0, 0.0, 1.0);
  CHECK(interior.y == 0.5);
  CHECK(interior.dr_plus == 0.0);
  CHECK(interior.dr_minus == 0.0);

  // y-dependent driver: the increment balances the equation at the reflected
  // value, 0 = -2 + f(0)*dt + dr_plus with f(0) = 0
  auto pinned = reflected_step(-2.0, 0.0, 0.0, linear(-1, 0, 0), 0.5, 0.0, 0.0, 1.0);
  CHECK(pinned.y == 0.0);
  CHECK(std::abs(pinned.dr_plus - 2.0) < 1e-14);
  CHECK(pinned.dr_minus == 0.0);

  // half-open sides
  auto below = reflected_step(-2.0, 0.0, 0.0, zero, 1.0, 0.0, 0.0, kInf);
  CHECK(below.y == 0.0);
  CHECK(below.dr_plus == doctest::Approx(2.0));
  auto free_step = reflected_step(-2.0, 0.0, 0.0, zero, 1.0, 0.0, -kInf, kInf);
  CHECK(free_step.y == -2.0);

  CHECK_THROWS_AS(reflected_step(0.0, 0.0, 0.0, zero, 1.0, 0.0, 1.0, 0.0), GuardError);
}

TEST_CASE("solve_rbsde with inactive barriers is the plain solve") {
  auto lat = full(3);
  ProblemSpec spec{lat, linear(-1, 0.5, 0),
                   BarrierPair(AdaptedProcess(lat, -1e6), AdaptedProcess(lat, 1e6),
                               walk_terminal(lat)),
                   std::nullopt};
  auto plain = solve_bsde(spec);
  auto sol = solve_rbsde(spec);
  for (std::int64_t i = 0; i < lat->node_count(); ++i) {
    CHECK(sol.y.at_flat(i) == plain.y.at_flat(i));
    CHECK(sol.r_plus.at_flat(i) == 0.0);
    CHECK(sol.r_minus.at_flat(i) == 0.0);
  }
}

TEST_CASE("solve_rbsde pinched between equal barriers") {
  auto lat = full(2);
  ProblemSpec spec{lat, make_preset_driver("zero", {}),
                   BarrierPair(AdaptedProcess(lat, 0.0), AdaptedProcess(lat, 0.0),
                               {0, 0, 0, 0}),
                   std::nullopt};
  auto sol = solve_rbsde(spec);
  for (std::int64_t i = 0; i < lat->node_count(); ++i) CHECK(sol.y.at_flat(i) == 0.0);
  CHECK(audit_solution(spec, sol).pass());
}

TEST_CASE("one-barrier solves and their mirror symmetry") {
  auto lat = full(1);

  // barrier 0 at the root, released at the leaves so xi = -1 is admissible:
  // the expectation -1 is clamped up to 0 by a unit increment
  ProblemSpec low{lat, make_preset_driver("zero", {}),
                  BarrierPair(barrier_until_horizon(lat, 0.0, -10.0),
                              AdaptedProcess(lat, 1e6), {-1.0, -1.0}),
                  std::nullopt};
  auto sol = solve_one_barrier(low, BarrierSide::Lower);
  CHECK(sol.y[{0, 0}] == 0.0);
  CHECK(sol.r_plus[{0, 0}] == doctest::Approx(1.0));
  CHECK(sol.r_minus[{0, 0}] == 0.0);
  CHECK(sol.y[{1, 0}] == -1.0);  // terminal data kept even under the barrier
  CHECK(audit_solution(low, sol, true, false).pass());

  ProblemSpec high{lat, make_preset_driver("zero", {}),
                   BarrierPair(AdaptedProcess(lat, -1e6),
                               barrier_until_horizon(lat, 0.0, 10.0), {1.0, 1.0}),
                   std::nullopt};
  auto mirror = solve_one_barrier(high, BarrierSide::Upper);
  CHECK(mirror.y[{0, 0}] == 0.0);
  CHECK(mirror.r_minus[{0, 0}] == doctest::Approx(1.0));
  CHECK(mirror.r_plus[{0, 0}] == 0.0);
  CHECK(audit_solution(high, mirror, false, true).pass());

  // an inactive barrier leaves the plain solve untouched
  ProblemSpec free_spec{lat, linear(-1, 0, 0),
                        BarrierPair(AdaptedProcess(lat, -1e6), AdaptedProcess(lat, 1e6),
                                    {1.0, 1.0}),
                        std::nullopt};
  CHECK(solve_one_barrier(free_spec, BarrierSide::Lower).y[{0, 0}] ==
        solve_bsde(free_spec).y[{0, 0}]);
}

TEST_CASE("penalized solves approach the reflected value at rate 1/(1+n)") {
  auto spec = one_step_band();

  // y = 2 - n (y-1)^+  =>  y = 1 + 1/(1+n)
  auto n1 = solve_penalized(spec, 1.0, PenaltyScheme::TwoSided);
  CHECK(std::abs(n1.y[{0, 0}] - 1.5) < 1e-12);
  auto n9 = solve_penalized(spec, 9.0, PenaltyScheme::TwoSided);
  CHECK(std::abs(n9.y[{0, 0}] - 1.1) < 1e-12);

  auto n0 = solve_penalized(spec, 0.0, PenaltyScheme::TwoSided);
  CHECK(n0.y[{0, 0}] == solve_bsde(spec).y[{0, 0}]);

  CHECK_THROWS_AS(solve_penalized(spec, -1.0, PenaltyScheme::TwoSided), GuardError);

  auto rows = penalty_study(spec, {1.0, 9.0, 99.0});
  REQUIRE(rows.size() == 3);
  CHECK(std::abs(rows[0].sup_error - 0.5) < 1e-12);
  CHECK(std::abs(rows[1].sup_error - 0.1) < 1e-12);
  CHECK(std::abs(rows[2].sup_error - 0.01) < 1e-12);
  for (const auto& row : rows) {
    CHECK(row.lower_monotone);
    CHECK(row.upper_monotone);
    CHECK(row.err_monotone);
  }

  CHECK_THROWS_AS(penalty_study(spec, {9.0, 1.0}), GuardError);  // must increase
}

TEST_CASE("penalty study on inactive barriers reports zero error") {
  auto lat = full(2);
  ProblemSpec spec{lat, linear(-1, 0.5, 0),
                   BarrierPair(AdaptedProcess(lat, -1e6), AdaptedProcess(lat, 1e6),
                               walk_terminal(lat)),
                   std::nullopt};
  for (const auto& row : penalty_study(spec, {1.0, 10.0}))
    CHECK(row.sup_error == 0.0);
}

TEST_CASE("one-sided penalization brackets the two-sided scheme") {
  auto spec = band_instance();
  auto ref = solve_rbsde(spec);
  const auto& lat = *spec.lattice;

  std::vector<double> prev_lower, prev_upper;
  for (const double n : {1.0, 10.0, 100.0}) {
    auto lower = solve_penalized(spec, n, PenaltyScheme::LowerOnly);
    auto two = solve_penalized(spec, n, PenaltyScheme::TwoSided);
    auto upper = solve_penalized(spec, n, PenaltyScheme::UpperOnly);
    for (std::int64_t i = 0; i < lat.node_count(); ++i) {
      CHECK(lower.y.at_flat(i) <= two.y.at_flat(i) + 1e-12);
      CHECK(two.y.at_flat(i) <= upper.y.at_flat(i) + 1e-12);
      // the one-sided iterates approach the reflected value from their side
      CHECK(lower.y.at_flat(i) <= ref.y.at_flat(i) + 1e-12);
      CHECK(upper.y.at_flat(i) >= ref.y.at_flat(i) - 1e-12);
      if (!prev_lower.empty()) {
        CHECK(lower.y.at_flat(i) >= prev_lower[static_cast<std::size_t>(i)] - 1e-12);
        CHECK(upper.y.at_flat(i) <= prev_upper[static_cast<std::size_t>(i)] + 1e-12);
      }
    }
    prev_lower = lower.y.values();
    prev_upper = upper.y.values();
  }

  auto rows = penalty_study(spec, {1, 4, 16, 64, 256, 1024, 4096});
  for (const auto& row : rows) {
    CHECK(row.lower_monotone);
    CHECK(row.upper_monotone);
    CHECK(row.err_monotone);
  }
  CHECK(rows.back().sup_error < 1e-3);
}

TEST_CASE("solution audit flags doctored solutions") {
  auto spec = band_instance();
  auto sol = solve_rbsde(spec);
  auto audit = audit_solution(spec, sol);
  CHECK(audit.pass());
  CHECK(audit.complementarity_ok);
  CHECK(audit.max_step_residual <= kStepResidualTol);

  std::vector<double> y = sol.y.values();
  y[0] += 1e-6;
  SolutionTriple bad{AdaptedProcess(spec.lattice, std::move(y)), sol.z, sol.r_plus,
                     sol.r_minus};
  CHECK_FALSE(audit_solution(spec, bad).pass());
}

TEST_CASE("cumulative sums follow each path") {
  auto lat = full(2);
  std::vector<double> inc{1, 2, 3, 0, 0, 0, 0};  // root, then depth-1 nodes
  auto cum = cumulative_along_paths(AdaptedProcess(lat, std::move(inc)));
  CHECK(cum[{0, 0}] == 1.0);
  CHECK(cum[{1, 0}] == 3.0);
  CHECK(cum[{1, 1}] == 4.0);
  CHECK(cum[{2, 0}] == 3.0);
  CHECK(cum[{2, 3}] == 4.0);
}

TEST_CASE("exponential rescaling reproduces e^{at} Y exactly") {
  auto spec = band_instance();
  for (const double a : {-1.0, 1.0}) {
    auto check = change_of_variable_check(spec, a, 1e-10);
    CAPTURE(a);
    CHECK(check.pass);
    CHECK(check.max_error_y <= 1e-10);
  }

  // with forcing and a nonzero reflection pattern
  auto lat = spec.lattice;
  spec.forcing = adapted_from_state_functional(lat, [](double t, double) { return 0.3 * t; });
  auto check = change_of_variable_check(spec, 1.0, 1e-10);
  CHECK(check.pass);
}
