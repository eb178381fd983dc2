#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dgl/game.hpp"
#include "dgl/threshold.hpp"

namespace dgl {

// Named desk instances used across tests, suites, and the CLI docs.
//
// d1: 3 steps on [0,1], driver linear(-1, 0.5, 0), unit band around the walk
//     (L = B-1, U = B+1), terminal = B_T. Strictly separated barriers, so the
//     whole saddle/maximality machinery applies with no threshold effects.
// m1: 8 steps on [0,1], zero driver, deterministic band that pinches shut at
//     t = 0.5 and reopens at slope 0.05 (L = -(0.5-t)^+ - 0.05(t-0.5)^+,
//     U = -L), terminal = B_T clamped into the band.
ProblemSpec desk_instance_d1();
ProblemSpec desk_instance_m1();

// Seeded variates built directly from the (portable) mt19937_64 bit stream;
// distribution adapters are implementation-defined and would break cross-
// platform reproducibility of the instance corpus.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(g_() >> 11) * 0x1.0p-53);
  }
  std::uint64_t raw() { return g_(); }

 private:
  std::mt19937_64 g_;
};

// Random game instance: FullBinary walk, linear driver with mono_y in [-2,0]
// and lip_z in [0,1], a strictly separated band with random width and tilt
// around the walk (jump-free), terminal = B_T clamped into the band.
ProblemSpec random_instance(std::uint64_t seed, int steps);

// Ordered instance pair on one lattice: the second weakly dominates the first
// in driver constant, barriers, forcing increments, and terminal data.
std::pair<ProblemSpec, ProblemSpec> random_ordered_pair(std::uint64_t seed, int steps);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double runtime_ms = 0.0;
};

// One runner per verified property bundle. Each returns a single pass/fail
// with a human-readable metric line; tolerances are pinned inside.
CheckResult suite_oracle_equivalence(std::uint64_t seed);  // solver = swept game value
CheckResult suite_penalty_convergence();                   // error decay + closed form
CheckResult suite_monotone_schemes();                      // one-sided monotonicity + sandwich
CheckResult suite_reflection_audit(std::uint64_t seed);    // Skorokhod + complementarity
CheckResult suite_comparison(std::uint64_t seed);          // ordered data, ordered solutions
CheckResult suite_saddle_points();                         // star/hat exact saddles
CheckResult suite_maximality(std::uint64_t seed);          // all saddles stop by the hat pair
CheckResult suite_ef_calculus(std::uint64_t seed);         // monotone/tower/localize/reduce
CheckResult suite_strict_comparison(std::uint64_t seed);   // strict separation of values
CheckResult suite_threshold_pinch();                       // meeting barriers, restricted value
CheckResult suite_change_of_variable();                    // exp(at) rescaling invariance
CheckResult suite_touching_equivalence(std::uint64_t seed);  // cutoff value on touching bands

// All suites in report order: the eleven asserted ones above, then the
// touching-band study.
std::vector<CheckResult> run_all_suites(std::uint64_t seed);

}  // namespace dgl
