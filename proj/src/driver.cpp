#include "dgl/driver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dgl {

Driver make_preset_driver(const std::string& name, std::span<const double> params) {
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw Error("driver preset '" + name + "' expects " + std::to_string(n) +
                  " parameter(s), got " + std::to_string(params.size()));
  };
  Driver d;
  d.label = name;
  if (name == "zero") {
    need(0);
    d.eval = [](double, double, double) { return 0.0; };
    d.affine = true;
  } else if (name == "linear") {
    need(3);
    const double a = params[0], b = params[1], c = params[2];
    d.eval = [a, b, c](double, double y, double z) { return a * y + b * z + c; };
    d.lip_z = std::abs(b);
    d.mono_y = a;
    d.affine = true;
    d.ay = a;
    d.bz = b;
    d.c0 = c;
  } else if (name == "monotone_cubic") {
    // arbitrary growth in y, Lipschitz in z
    need(1);
    const double c = params[0];
    d.eval = [c](double, double y, double z) { return -y * y * y + c * std::tanh(z); };
    d.lip_z = std::abs(c);
    d.mono_y = 0.0;
  } else if (name == "bounded_z") {
    // strictly sublinear z-growth; kappa < 1 keeps (1+|z|)^kappa kappa-Lipschitz
    need(2);
    const double gamma = params[0], kappa = params[1];
    if (gamma < 0.0 || kappa < 0.0 || kappa >= 1.0)
      throw Error("bounded_z needs gamma >= 0 and kappa in [0,1)");
    d.eval = [gamma, kappa](double, double y, double z) {
      return gamma * std::pow(1.0 + std::abs(z), kappa) - y;
    };
    d.lip_z = gamma * kappa;
    d.mono_y = -1.0;
    d.growth_gamma = gamma;
    d.growth_kappa = kappa;
    d.growth_g = 1.0;
    d.has_growth = true;
  } else {
    throw Error("unknown driver preset '" + name + "'");
  }
  return d;
}

void ProblemSpec::validate() const {
  if (!lattice) throw Error("ProblemSpec: missing lattice");
  if (!driver.eval) throw Error("ProblemSpec: driver has no evaluator");
  if (barriers.lattice_ptr() != lattice) throw Error("ProblemSpec: barrier lattice mismatch");
  if (forcing) {
    if (forcing->lattice_ptr() != lattice) throw Error("ProblemSpec: forcing lattice mismatch");
    if (forcing->at_flat(0) != 0.0) throw Error("ProblemSpec: forcing must have V(root) = 0");
  }
  if (driver.mono_y * lattice->dt() >= 1.0)
    throw GuardError("step-size guard violated: mono_y * dt = " +
                     std::to_string(driver.mono_y * lattice->dt()) + " >= 1");
}

namespace {

void update(HypothesisCheck& c, double slack, double t, double y, double z, double w) {
  if (slack > c.worst_slack) {
    c.worst_slack = slack;
    c.witness[0] = t;
    c.witness[1] = y;
    c.witness[2] = z;
    c.witness[3] = w;
  }
}

}  // namespace

HypothesisReport check_hypotheses(const Driver& driver, const HypothesisSampleSpec& s) {
  if (s.count < 1) throw Error("check_hypotheses needs count >= 1");
  constexpr double kTol = 1e-9;
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> ut(s.t_min, s.t_max);
  std::uniform_real_distribution<double> uy(s.y_min, s.y_max);
  std::uniform_real_distribution<double> uz(s.z_min, s.z_max);

  HypothesisReport r;
  for (int i = 0; i < s.count; ++i) {
    const double t = ut(rng), y = uy(rng), z = uz(rng);
    const double y2 = uy(rng), z2 = uz(rng);
    const double f = driver(t, y, z);
    const double f_z2 = driver(t, y, z2);
    const double f_y2 = driver(t, y2, z);
    const double f_z0 = driver(t, y, 0.0);
    if (!std::isfinite(f) || !std::isfinite(f_z2) || !std::isfinite(f_y2) ||
        !std::isfinite(f_z0)) {
      r.finite = false;
      continue;
    }
    update(r.lipschitz_z, std::abs(f - f_z2) - driver.lip_z * std::abs(z - z2), t, y, z, z2);
    update(r.monotone_y, (y - y2) * (f - f_y2) - driver.mono_y * (y - y2) * (y - y2),
           t, y, z, y2);
    if (driver.has_growth) {
      const double bound = driver.growth_gamma *
          std::pow(driver.growth_g + std::abs(y) + std::abs(z), driver.growth_kappa);
      update(r.growth_z, std::abs(f - f_z0) - bound, t, y, z, 0.0);
    }
  }
  r.lipschitz_z.pass = r.lipschitz_z.worst_slack <= kTol;
  r.monotone_y.pass = r.monotone_y.worst_slack <= kTol;
  r.growth_z.pass = !driver.has_growth || r.growth_z.worst_slack <= kTol;
  return r;
}

double condition_g_sum(const ProblemSpec& spec) {
  spec.validate();
  const Lattice& lat = *spec.lattice;
  const double dt = lat.dt();
  double sum = 0.0;
  // running max of L^+ and of U^- along each path would be path data; the
  // conservative per-depth bound below keeps this a cheap finite report
  double run_lp = 0.0, run_um = 0.0;
  for (int d = 0; d <= lat.steps(); ++d) {
    const double t = lat.grid().time(d);
    double lp = 0.0, um = 0.0;
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      lp = std::max(lp, std::max(spec.barriers.lower()[{d, p}], 0.0));
      um = std::max(um, std::max(-spec.barriers.upper()[{d, p}], 0.0));
    }
    run_lp = std::max(run_lp, lp);
    run_um = std::max(run_um, um);
    sum += dt * (std::max(-spec.driver(t, run_lp, 0.0), 0.0) +
                 std::max(spec.driver(t, -run_um, 0.0), 0.0));
  }
  return sum;
}

}  // namespace dgl
