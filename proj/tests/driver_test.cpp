#include <array>
#include <cmath>

#include "dgl/driver.hpp"
#include "doctest.h"

using namespace dgl;

TEST_CASE("driver presets evaluate their formulas") {
  auto zero = make_preset_driver("zero", {});
  CHECK(zero(0.3, -7.0, 4.0) == 0.0);
  CHECK(zero.lip_z == 0.0);
  CHECK(zero.affine);

  std::array<double, 3> lp{-1.0, 0.5, 0.0};
  auto lin = make_preset_driver("linear", lp);
  CHECK(lin(0.0, 2.0, 4.0) == doctest::Approx(0.0));  // -2 + 2
  CHECK(lin.lip_z == 0.5);
  CHECK(lin.mono_y == -1.0);
  CHECK(lin.affine);

  std::array<double, 1> cp{1.0};
  auto cubic = make_preset_driver("monotone_cubic", cp);
  CHECK(cubic(0.0, 1.0, 0.0) == doctest::Approx(-1.0));
  CHECK(cubic.mono_y == 0.0);
  CHECK_FALSE(cubic.affine);

  std::array<double, 2> bp{2.0, 0.5};
  auto bz = make_preset_driver("bounded_z", bp);
  CHECK(bz(0.0, 0.0, 0.0) == doctest::Approx(2.0));  // gamma*(1+0)^k - 0
  CHECK(bz(0.0, 1.0, 3.0) == doctest::Approx(2.0 * 2.0 - 1.0));
  CHECK(bz.has_growth);

  CHECK_THROWS_WITH_AS(make_preset_driver("foo", {}), doctest::Contains("foo"), Error);
  CHECK_THROWS_AS(make_preset_driver("linear", cp), Error);  // arity
}

TEST_CASE("hypothesis checks on declared constants") {
  HypothesisSampleSpec sample;  // 10^4 points over [-10,10]^2

  for (const char* name : {"zero", "linear", "monotone_cubic", "bounded_z"}) {
    std::vector<double> params;
    if (std::string(name) == "linear") params = {-1.0, 0.5, 0.25};
    if (std::string(name) == "monotone_cubic") params = {1.0};
    if (std::string(name) == "bounded_z") params = {0.5, 0.5};
    auto report = check_hypotheses(make_preset_driver(name, params), sample);
    CAPTURE(name);
    CHECK(report.all_pass());
    CHECK(report.integrability_auto);
  }

  // understated Lipschitz constant is caught with a witness
  std::array<double, 3> steep{0.0, 2.0, 0.0};
  auto lied = make_preset_driver("linear", steep);
  lied.lip_z = 1.0;
  auto report = check_hypotheses(lied, sample);
  CHECK_FALSE(report.lipschitz_z.pass);
  CHECK(report.lipschitz_z.worst_slack > 0.0);

  // understated monotonicity constant likewise
  std::array<double, 3> up{1.0, 0.0, 0.0};
  auto rising = make_preset_driver("linear", up);
  rising.mono_y = 0.0;
  CHECK_FALSE(check_hypotheses(rising, sample).monotone_y.pass);
}

TEST_CASE("problem spec validation") {
  auto lat = build_lattice({1.0, 2}, TreeKind::FullBinary);
  ProblemSpec spec{lat, make_preset_driver("zero", {}),
                   BarrierPair(AdaptedProcess(lat, -5.0), AdaptedProcess(lat, 5.0),
                               std::vector<double>(4, 0.0)),
                   std::nullopt};
  CHECK_NOTHROW(spec.validate());
  CHECK(condition_g_sum(spec) >= 0.0);

  // step-size guard: mu * dt >= 1
  std::array<double, 3> fast{2.5, 0.0, 0.0};
  spec.driver = make_preset_driver("linear", fast);
  CHECK_THROWS_AS(spec.validate(), GuardError);
  spec.driver = make_preset_driver("zero", {});

  // forcing must start at zero and live on the same lattice
  std::vector<double> v(static_cast<std::size_t>(lat->node_count()), 0.0);
  v[0] = 1.0;
  spec.forcing = AdaptedProcess(lat, std::move(v));
  CHECK_THROWS_AS(spec.validate(), Error);
}
