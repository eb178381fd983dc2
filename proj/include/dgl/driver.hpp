#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgl/lattice.hpp"

namespace dgl {

// Generator f(t, y, z) with its declared structural constants:
//   lip_z   (lambda): |f(t,y,z) - f(t,y,z')| <= lip_z * |z - z'|
//   mono_y  (mu):     (y-y') (f(t,y,z) - f(t,y',z)) <= mono_y * (y-y')^2
//   growth  (gamma, kappa, g): |f(t,y,z) - f(t,y,0)| <= gamma*(g + |y| + |z|)^kappa
struct Driver {
  std::string label = "zero";
  std::function<double(double t, double y, double z)> eval;
  double lip_z = 0.0;
  double mono_y = 0.0;
  double growth_gamma = 0.0;
  double growth_kappa = 0.0;
  double growth_g = 1.0;
  bool has_growth = false;

  // f = ay*y + bz*z + c0 exactly; lets one-step solves skip root bracketing.
  bool affine = false;
  double ay = 0.0, bz = 0.0, c0 = 0.0;

  double operator()(double t, double y, double z) const { return eval(t, y, z); }
};

// Presets: zero | linear(a,b,c) | monotone_cubic(c) | bounded_z(gamma,kappa).
Driver make_preset_driver(const std::string& name, std::span<const double> params);

// Full problem data for backward solves.
struct ProblemSpec {
  LatticePtr lattice;
  Driver driver;
  BarrierPair barriers;
  // cumulative finite-variation forcing V with V(root) = 0; the per-step
  // increment used by the solvers is the predictable projection
  // (V(up)+V(down))/2 - V(node).
  std::optional<AdaptedProcess> forcing;

  void validate() const;  // lattice consistency, V(root)=0, mu*dt < 1
};

struct HypothesisSampleSpec {
  double t_min = 0.0, t_max = 1.0;
  double y_min = -10.0, y_max = 10.0;
  double z_min = -10.0, z_max = 10.0;
  int count = 10000;
  std::uint64_t seed = 0;
};

struct HypothesisCheck {
  bool pass = true;
  double worst_slack = 0.0;           // most positive violation found
  double witness[4] = {0, 0, 0, 0};   // (t, y, z, second y or z)
};

struct HypothesisReport {
  HypothesisCheck lipschitz_z;   // (H1)
  HypothesisCheck monotone_y;    // (H2)
  HypothesisCheck growth_z;      // (Z); pass trivially when !has_growth
  bool finite = true;            // eval stayed finite on all samples (H3 spot check)
  // Integrability conditions hold automatically on a finite tree; recorded for
  // report completeness.
  bool integrability_auto = true;

  bool all_pass() const { return pass_core() && finite; }
  bool pass_core() const { return lipschitz_z.pass && monotone_y.pass && growth_z.pass; }
};

HypothesisReport check_hypotheses(const Driver& driver, const HypothesisSampleSpec& sample);

// Finite-sum analog of the one-barrier integrability condition: sum over nodes
// of f(t, L*+, 0)^- + f(t, -U*-, 0)^+ weighted by dt (always finite here;
// reported for completeness).
double condition_g_sum(const ProblemSpec& spec);

}  // namespace dgl
