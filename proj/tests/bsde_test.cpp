#include <array>
#include <cmath>
#include <vector>

#include "dgl/bsde.hpp"
#include "doctest.h"

using namespace dgl;

namespace {

LatticePtr full(int steps) { return build_lattice({1.0, steps}, TreeKind::FullBinary); }

BarrierPair wide_band(const LatticePtr& lat, std::vector<double> xi) {
  return {AdaptedProcess(lat, -1e6), AdaptedProcess(lat, 1e6), std::move(xi)};
}

ProblemSpec plain(const LatticePtr& lat, Driver driver, std::vector<double> xi) {
  return {lat, std::move(driver), wide_band(lat, std::move(xi)), std::nullopt};
}

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

}  // namespace

TEST_CASE("implicit_step solves y = a + f(t,y,z) dt") {
  auto zero = make_preset_driver("zero", {});
  CHECK(implicit_step(5.0, 0.0, 3.0, zero, 0.25) == 5.0);

  // y = 1 - 0.5 y  =>  y = 2/3
  CHECK(std::abs(implicit_step(1.0, 0.0, 0.0, linear(-1, 0, 0), 0.5) - 2.0 / 3.0) < 1e-15);

  // y + y^3 = 2  =>  y = 1, via bisection
  std::array<double, 1> one{1.0};
  auto cubic = make_preset_driver("monotone_cubic", one);
  CHECK(std::abs(implicit_step(2.0, 0.0, 0.0, cubic, 1.0) - 1.0) < 1e-12);

  // forcing shifts the fixed point: y = 1 - 0.5 y + 0.5  =>  y = 1
  CHECK(std::abs(implicit_step(1.0, 0.0, 0.0, linear(-1, 0, 0), 0.5, 0.5) - 1.0) < 1e-15);

  CHECK_THROWS_AS(implicit_step(1.0, 0.0, 0.0, linear(2, 0, 0), 0.5), GuardError);

  // no root: h(y) = y - y^2 never reaches 10, bracketing gives up
  Driver square;
  square.label = "square";
  square.eval = [](double, double y, double) { return y * y; };
  CHECK_THROWS_AS(implicit_step(10.0, 0.0, 0.0, square, 1.0), NumericError);

  CHECK_THROWS_AS(implicit_step(std::nan(""), 0.0, 0.0, zero, 0.5), NumericError);
}

TEST_CASE("solve_bsde with zero driver is the backward average") {
  auto lat = full(2);

  auto mart = solve_bsde(plain(lat, make_preset_driver("zero", {}), walk_terminal(lat)));
  CHECK(mart.y[{0, 0}] == 0.0);
  for (int d = 0; d < 2; ++d)
    for (std::int64_t p = 0; p < lat->width(d); ++p)
      CHECK(mart.z[{d, p}] == doctest::Approx(1.0));  // representation of B itself
  CHECK(mart.z[{2, 1}] == 0.0);                       // no increment after the horizon

  auto flat = solve_bsde(plain(lat, make_preset_driver("zero", {}), {3.0, 3.0, 3.0, 3.0}));
  for (std::int64_t i = 0; i < lat->node_count(); ++i) {
    CHECK(flat.y.at_flat(i) == 3.0);
    CHECK(flat.z.at_flat(i) == 0.0);
  }
}

TEST_CASE("solve_bsde matches two implicit steps by hand") {
  // y = 1/(1+dt) per step with terminal 1, so the root is (2/3)^2 = 4/9
  auto lat = full(2);
  auto sol = solve_bsde(plain(lat, linear(-1, 0, 0), {1.0, 1.0, 1.0, 1.0}));
  CHECK(std::abs(sol.y[{0, 0}] - 4.0 / 9.0) < 1e-15);
  CHECK(std::abs(sol.y[{1, 0}] - 2.0 / 3.0) < 1e-15);
  CHECK(sol.z[{0, 0}] == 0.0);
}

TEST_CASE("solve_bsde applies predictable forcing increments") {
  // V = t: every step adds dt, so with f = 0 the root value is E[xi] + T
  auto lat = full(2);
  auto spec = plain(lat, make_preset_driver("zero", {}), walk_terminal(lat));
  spec.forcing = adapted_from_state_functional(lat, [](double t, double) { return t; });
  const auto dv = forcing_increments(spec);
  for (int d = 0; d < 2; ++d)
    for (std::int64_t p = 0; p < lat->width(d); ++p)
      CHECK(dv[static_cast<std::size_t>(lat->index({d, p}))] == doctest::Approx(0.5));
  auto sol = solve_bsde(spec);
  CHECK(std::abs(sol.y[{0, 0}] - 1.0) < 1e-15);
}

TEST_CASE("ef_backward freezes the payoff at the stop frontier") {
  auto lat = full(2);
  auto spec = plain(lat, linear(-1, 0, 0), {1.0, 1.0, 1.0, 1.0});
  AdaptedProcess one(lat, 1.0);

  // stop = observe: the identity map
  const auto depth1 = StoppingRule::at_depth(lat, 1);
  auto vals = nonlinear_expectation(spec, depth1, one, depth1);
  REQUIRE(vals.size() == 2);
  CHECK(vals[0] == 1.0);
  CHECK(vals[1] == 1.0);

  // observe at root through the horizon: the two-step hand value again
  auto at_root = nonlinear_expectation(spec, StoppingRule::at_terminal(lat), one,
                                       StoppingRule::at_root(lat));
  REQUIRE(at_root.size() == 1);
  CHECK(std::abs(at_root[0] - 4.0 / 9.0) < 1e-15);

  // zero driver: conditional expectation at the observation frontier
  auto spec0 = plain(lat, make_preset_driver("zero", {}), walk_terminal(lat));
  AdaptedProcess bt = adapted_from_state_functional(lat, [](double, double b) { return b; });
  auto cond = nonlinear_expectation(spec0, StoppingRule::at_terminal(lat), bt, depth1);
  CHECK(cond[0] == doctest::Approx(lat->brownian({1, 0})));
  CHECK(cond[1] == doctest::Approx(lat->brownian({1, 1})));

  // observation after the stop is rejected
  CHECK_THROWS_AS(
      nonlinear_expectation(spec, depth1, one, StoppingRule::at_terminal(lat)),
      GuardError);
}

TEST_CASE("tower property of the stopped evaluations") {
  auto lat = full(2);
  auto spec = plain(lat, linear(-1, 0.5, 0), walk_terminal(lat));
  AdaptedProcess payoff = adapted_from_state_functional(
      lat, [](double t, double b) { return t + b * b; });
  const auto root = StoppingRule::at_root(lat);

  const auto rules = enumerate_stopping_rules(lat);
  for (const auto& rho : rules)
    for (const auto& tau : rules) {
      if (!leq_pathwise(rho, tau)) continue;
      const AdaptedProcess inner = ef_backward(spec, tau, payoff);
      const double direct = nonlinear_expectation(spec, tau, payoff, root)[0];
      const double nested = nonlinear_expectation(spec, rho, inner, root)[0];
      CHECK(std::abs(direct - nested) < 1e-12);
    }
}

TEST_CASE("classify_ef reads one-step drifts") {
  auto lat = full(2);
  auto spec = plain(lat, linear(-1, 0.5, 0), walk_terminal(lat));
  const auto root = StoppingRule::at_root(lat);
  const auto term = StoppingRule::at_terminal(lat);

  auto sol = solve_bsde(spec);
  auto r = classify_ef(spec, sol.y, root, term);
  CHECK(r.cls == MartingaleClass::Martingale);

  // lifting the root value only makes it a supermartingale with witness there
  auto spec0 = plain(lat, make_preset_driver("zero", {}), walk_terminal(lat));
  std::vector<double> bumped = solve_bsde(spec0).y.values();
  bumped[0] += 1.0;
  auto up = classify_ef(spec0, AdaptedProcess(lat, bumped), root, term);
  CHECK(up.cls == MartingaleClass::Supermartingale);
  CHECK(up.max_up == doctest::Approx(1.0));
  CHECK(up.witness_up == NodeRef{0, 0});

  bumped[0] -= 2.0;
  auto down = classify_ef(spec0, AdaptedProcess(lat, bumped), root, term);
  CHECK(down.cls == MartingaleClass::Submartingale);

  // region [r, r) is empty
  auto none = classify_ef(spec0, sol.y, root, root);
  CHECK(none.empty_region);
  CHECK(none.cls == MartingaleClass::Martingale);

  CHECK_THROWS_AS(classify_ef(spec0, sol.y, term, root), GuardError);
}

TEST_CASE("strict comparison of ordered terminal data") {
  auto lat = full(2);
  auto spec0 = plain(lat, make_preset_driver("zero", {}), {0, 0, 0, 0});
  const auto term = StoppingRule::at_terminal(lat);

  std::vector<double> xi{1.0, 2.0, 3.0, 4.0};
  CHECK(strict_comparison_check(spec0, xi, xi, term).holds);

  // one leaf strictly larger: every ancestor of that leaf separates
  std::vector<double> lower{1.0, 2.0, 3.0, 3.0};
  auto res = strict_comparison_check(spec0, xi, lower, term);
  CHECK(res.holds);

  auto lin = plain(lat, linear(-1, 0.5, 0), {0, 0, 0, 0});
  CHECK(strict_comparison_check(lin, xi, lower, term).holds);

  // requires xi1 >= xi2
  CHECK_THROWS_AS(strict_comparison_check(spec0, lower, xi, term), Error);
}
