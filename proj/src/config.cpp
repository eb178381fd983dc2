#include "dgl/config.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <sstream>

#include "dgl/threshold.hpp"
#include "json.hpp"

namespace dgl {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Collector {
  std::vector<std::string> errors;

  void add(const std::string& msg) { errors.push_back(msg); }

  void finish() const {
    if (errors.empty()) return;
    std::ostringstream os;
    os << "invalid config (" << errors.size()
       << (errors.size() == 1 ? " problem):" : " problems):");
    for (const std::string& e : errors) os << "\n  - " << e;
    throw ConfigError(os.str());
  }
};

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed, Collector& out) {
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) {
      return item.key() == k;
    });
    if (!known) out.add(where + ": unknown key '" + item.key() + "'");
  }
}

// Each getter returns whether the value landed; absence is fine (defaults),
// wrong types are collected.
bool get_object(const json& obj, const std::string& where, const char* key,
                json& out_obj, Collector& out) {
  if (!obj.contains(key)) return false;
  if (!obj.at(key).is_object()) {
    out.add(where + "." + key + ": expected an object");
    return false;
  }
  out_obj = obj.at(key);
  return true;
}

bool get_real(const json& obj, const std::string& where, const char* key, double& value,
              Collector& out) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    out.add(where + "." + key + ": expected a finite number");
    return false;
  }
  value = v.get<double>();
  return true;
}

bool get_int(const json& obj, const std::string& where, const char* key, int& value,
             Collector& out) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    out.add(where + "." + key + ": expected an integer");
    return false;
  }
  value = v.get<int>();
  return true;
}

bool get_string(const json& obj, const std::string& where, const char* key,
                std::string& value, Collector& out) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  if (!v.is_string()) {
    out.add(where + "." + key + ": expected a string");
    return false;
  }
  value = v.get<std::string>();
  return true;
}

bool get_reals(const json& obj, const std::string& where, const char* key,
               std::vector<double>& value, Collector& out) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  if (!v.is_array()) {
    out.add(where + "." + key + ": expected an array of numbers");
    return false;
  }
  std::vector<double> parsed;
  for (const json& e : v) {
    if (!e.is_number() || !std::isfinite(e.get<double>())) {
      out.add(where + "." + key + ": expected an array of finite numbers");
      return false;
    }
    parsed.push_back(e.get<double>());
  }
  value = std::move(parsed);
  return true;
}

void validate_driver(const DriverConfig& cfg, Collector& out) {
  try {
    make_preset_driver(cfg.preset, cfg.params);
  } catch (const Error& e) {
    out.add(std::string("driver: ") + e.what());
  }
}

void validate_barriers(const BarrierConfig& cfg, Collector& out) {
  const std::string& f = cfg.family;
  const std::size_t n = cfg.params.size();
  auto arity = [&](std::size_t lo, std::size_t hi, const char* usage) {
    if (n < lo || n > hi) {
      out.add("barriers: family '" + f + "' takes params " + usage);
      return false;
    }
    return true;
  };
  if (f == "separated") {
    if (arity(1, 1, "[delta] with delta > 0") && !(cfg.params[0] > 0.0))
      out.add("barriers: family 'separated' needs delta > 0");
  } else if (f == "closing_gap") {
    if (arity(1, 2, "[t0] or [t0, slope]") && n == 2 && !(cfg.params[1] >= 0.0))
      out.add("barriers: family 'closing_gap' needs slope >= 0");
  } else if (f == "touching") {
    if (arity(2, 2, "[delta, stride]") &&
        (!(cfg.params[0] > 0.0) || cfg.params[1] < 1.0 ||
         cfg.params[1] != static_cast<int>(cfg.params[1])))
      out.add("barriers: family 'touching' needs delta > 0 and integer stride >= 1");
  } else if (f == "sampled_rough") {
    if (arity(2, 2, "[eps0, seed]") && !(cfg.params[0] > 0.0))
      out.add("barriers: family 'sampled_rough' needs eps0 > 0");
  } else {
    out.add("barriers: unknown family '" + f +
            "' (known: separated, closing_gap, touching, sampled_rough)");
  }
}

void validate_terminal(const TerminalConfig& cfg, Collector& out) {
  const std::size_t n = cfg.params.size();
  if (cfg.preset == "bt" || cfg.preset == "coin") {
    if (n != 0) out.add("terminal: preset '" + cfg.preset + "' takes no params");
  } else if (cfg.preset == "constant") {
    if (n != 1) out.add("terminal: preset 'constant' takes params [value]");
  } else {
    out.add("terminal: unknown preset '" + cfg.preset + "' (known: bt, constant, coin)");
  }
}

bool parse_kind(const std::string& name, ExperimentKind& kind) {
  if (name == "solve") kind = ExperimentKind::Solve;
  else if (name == "penalty_study") kind = ExperimentKind::PenaltyStudy;
  else if (name == "game_verify") kind = ExperimentKind::GameVerify;
  else if (name == "maximality") kind = ExperimentKind::Maximality;
  else if (name == "mokobodzki_report") kind = ExperimentKind::MokobodzkiReport;
  else if (name == "property_suite") kind = ExperimentKind::PropertySuite;
  else return false;
  return true;
}

void validate_experiment(const ExperimentConfig& cfg, const ExperimentSpec& e,
                         const std::string& where, Collector& out) {
  const std::string name = experiment_kind_name(e.kind);
  const bool needs_rules =
      e.kind == ExperimentKind::GameVerify || e.kind == ExperimentKind::Maximality ||
      e.kind == ExperimentKind::MokobodzkiReport;
  if (needs_rules && cfg.tree != "full_binary")
    out.add(where + ": " + name + " enumerates stopping rules and needs tree full_binary");
  if (e.kind == ExperimentKind::GameVerify && cfg.steps > 4)
    out.add(where + ": game_verify sweeps all stopping rules and needs steps <= 4");
  if (e.kind == ExperimentKind::Maximality && cfg.steps > 3)
    out.add(where + ": maximality scans all rule pairs and needs steps <= 3");

  for (const double n : e.penalty_n)
    if (!(n > 0.0)) {
      out.add(where + ": penalty strengths must be positive");
      break;
    }
  if (e.penalty_n.empty()) out.add(where + ": penalty strength list must not be empty");
  for (const double eps : e.eps)
    if (!(eps > 0.0)) {
      out.add(where + ": eps values must be positive");
      break;
    }
  if (e.eps.empty()) out.add(where + ": eps list must not be empty");
}

ExperimentConfig validate(const json& doc) {
  Collector out;
  ExperimentConfig cfg;
  if (!doc.is_object()) {
    out.add("top level: expected an object");
    out.finish();
  }
  check_keys(doc, "top level",
             {"grid", "tree", "driver", "barriers", "terminal", "theta", "experiments",
              "tolerances", "seed", "out_dir"},
             out);

  json section;
  if (get_object(doc, "config", "grid", section, out)) {
    check_keys(section, "grid", {"horizon", "steps"}, out);
    get_real(section, "grid", "horizon", cfg.horizon, out);
    get_int(section, "grid", "steps", cfg.steps, out);
  }
  if (!(cfg.horizon > 0.0)) out.add("grid.horizon: must be positive");
  if (cfg.steps < 1) out.add("grid.steps: must be at least 1");

  if (get_object(doc, "config", "tree", section, out)) {
    check_keys(section, "tree", {"kind"}, out);
    get_string(section, "tree", "kind", cfg.tree, out);
  }
  if (cfg.tree != "full_binary" && cfg.tree != "recombining")
    out.add("tree.kind: expected 'full_binary' or 'recombining'");
  else if (cfg.tree == "full_binary" && cfg.steps > Lattice::kMaxFullBinarySteps)
    out.add("grid.steps: full_binary trees are capped at " +
            std::to_string(Lattice::kMaxFullBinarySteps) + " steps");
  else if (cfg.tree == "recombining" && cfg.steps > Lattice::kMaxRecombiningSteps)
    out.add("grid.steps: recombining trees are capped at " +
            std::to_string(Lattice::kMaxRecombiningSteps) + " steps");

  if (get_object(doc, "config", "driver", section, out)) {
    check_keys(section, "driver", {"preset", "params"}, out);
    get_string(section, "driver", "preset", cfg.driver.preset, out);
    get_reals(section, "driver", "params", cfg.driver.params, out);
  }
  validate_driver(cfg.driver, out);

  if (get_object(doc, "config", "barriers", section, out)) {
    check_keys(section, "barriers", {"family", "params"}, out);
    get_string(section, "barriers", "family", cfg.barriers.family, out);
    get_reals(section, "barriers", "params", cfg.barriers.params, out);
  }
  validate_barriers(cfg.barriers, out);

  if (get_object(doc, "config", "terminal", section, out)) {
    check_keys(section, "terminal", {"preset", "params"}, out);
    get_string(section, "terminal", "preset", cfg.terminal.preset, out);
    get_reals(section, "terminal", "params", cfg.terminal.params, out);
  }
  validate_terminal(cfg.terminal, out);

  if (get_object(doc, "config", "theta", section, out)) {
    check_keys(section, "theta", {"kind", "depth"}, out);
    get_string(section, "theta", "kind", cfg.theta.kind, out);
    get_int(section, "theta", "depth", cfg.theta.depth, out);
  }
  if (cfg.theta.kind == "root") {
    if (cfg.theta.depth != 0) out.add("theta.depth: only valid with kind 'depth'");
  } else if (cfg.theta.kind == "depth") {
    if (cfg.theta.depth < 0 || cfg.theta.depth > cfg.steps)
      out.add("theta.depth: must lie in [0, steps]");
  } else {
    out.add("theta.kind: unknown kind '" + cfg.theta.kind + "' (known: root, depth)");
  }

  if (doc.contains("experiments")) {
    if (!doc.at("experiments").is_array() || doc.at("experiments").empty()) {
      out.add("experiments: expected a non-empty array");
    } else {
      cfg.experiments.clear();
      std::size_t i = 0;
      for (const json& entry : doc.at("experiments")) {
        const std::string where = "experiments[" + std::to_string(i++) + "]";
        if (!entry.is_object()) {
          out.add(where + ": expected an object");
          continue;
        }
        ExperimentSpec e;
        std::string kind_name = "solve";
        get_string(entry, where, "kind", kind_name, out);
        if (!entry.contains("kind")) out.add(where + ": missing 'kind'");
        if (!parse_kind(kind_name, e.kind)) {
          out.add(where + ": unknown kind '" + kind_name +
                  "' (known: solve, penalty_study, game_verify, maximality, "
                  "mokobodzki_report, property_suite)");
          continue;
        }
        switch (e.kind) {
          case ExperimentKind::PenaltyStudy:
            check_keys(entry, where, {"kind", "n"}, out);
            get_reals(entry, where, "n", e.penalty_n, out);
            break;
          case ExperimentKind::GameVerify:
          case ExperimentKind::MokobodzkiReport:
            check_keys(entry, where, {"kind", "eps"}, out);
            get_reals(entry, where, "eps", e.eps, out);
            break;
          default:
            check_keys(entry, where, {"kind"}, out);
            break;
        }
        validate_experiment(cfg, e, where, out);
        cfg.experiments.push_back(std::move(e));
      }
    }
  } else {
    for (const ExperimentSpec& e : cfg.experiments)
      validate_experiment(cfg, e, "experiments[default]", out);
  }

  if (get_object(doc, "config", "tolerances", section, out)) {
    check_keys(section, "tolerances", {"contact", "gap", "solver"}, out);
    get_real(section, "tolerances", "contact", cfg.tolerances.contact, out);
    get_real(section, "tolerances", "gap", cfg.tolerances.gap, out);
    get_real(section, "tolerances", "solver", cfg.tolerances.solver, out);
  }
  if (!(cfg.tolerances.gap > 0.0)) out.add("tolerances.gap: must be positive");
  if (cfg.tolerances.contact != 1e-10)
    out.add("tolerances.contact: this build fixes the contact tolerance at 1e-10");
  if (cfg.tolerances.solver != 1e-13)
    out.add("tolerances.solver: this build fixes the solver tolerance at 1e-13");

  if (doc.contains("seed")) {
    const json& v = doc.at("seed");
    if (v.is_number_unsigned())
      cfg.seed = v.get<std::uint64_t>();
    else
      out.add("seed: expected a non-negative integer");
  }
  get_string(doc, "config", "out_dir", cfg.out_dir, out);
  if (cfg.out_dir.empty()) out.add("out_dir: must not be empty");

  out.finish();
  return cfg;
}

}  // namespace

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Solve: return "solve";
    case ExperimentKind::PenaltyStudy: return "penalty_study";
    case ExperimentKind::GameVerify: return "game_verify";
    case ExperimentKind::Maximality: return "maximality";
    case ExperimentKind::MokobodzkiReport: return "mokobodzki_report";
    case ExperimentKind::PropertySuite: return "property_suite";
  }
  return "solve";
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return validate(doc);
}

std::string serialize_config(const ExperimentConfig& config) {
  ordered_json doc;
  doc["grid"]["horizon"] = config.horizon;
  doc["grid"]["steps"] = config.steps;
  doc["tree"]["kind"] = config.tree;
  doc["driver"]["preset"] = config.driver.preset;
  doc["driver"]["params"] = config.driver.params;
  doc["barriers"]["family"] = config.barriers.family;
  doc["barriers"]["params"] = config.barriers.params;
  doc["terminal"]["preset"] = config.terminal.preset;
  doc["terminal"]["params"] = config.terminal.params;
  doc["theta"]["kind"] = config.theta.kind;
  if (config.theta.kind == "depth") doc["theta"]["depth"] = config.theta.depth;
  doc["experiments"] = ordered_json::array();
  for (const ExperimentSpec& e : config.experiments) {
    ordered_json entry;
    entry["kind"] = experiment_kind_name(e.kind);
    if (e.kind == ExperimentKind::PenaltyStudy) entry["n"] = e.penalty_n;
    if (e.kind == ExperimentKind::GameVerify || e.kind == ExperimentKind::MokobodzkiReport)
      entry["eps"] = e.eps;
    doc["experiments"].push_back(std::move(entry));
  }
  doc["tolerances"]["contact"] = config.tolerances.contact;
  doc["tolerances"]["gap"] = config.tolerances.gap;
  doc["tolerances"]["solver"] = config.tolerances.solver;
  doc["seed"] = config.seed;
  doc["out_dir"] = config.out_dir;
  return doc.dump(2) + "\n";
}

ProblemSpec build_problem(const ExperimentConfig& config) {
  const TreeKind kind =
      config.tree == "recombining" ? TreeKind::Recombining : TreeKind::FullBinary;
  auto lat = build_lattice({config.horizon, config.steps}, kind);
  Driver driver = make_preset_driver(config.driver.preset, config.driver.params);
  BarrierPair barriers =
      generate_barrier_family(config.barriers.family, lat, config.barriers.params);

  if (config.terminal.preset != "bt") {
    const int n = lat->steps();
    std::vector<double> xi(static_cast<std::size_t>(lat->width(n)));
    for (std::int64_t p = 0; p < lat->width(n); ++p) {
      const NodeRef leaf{n, p};
      const double raw = config.terminal.preset == "constant"
                             ? config.terminal.params[0]
                             : (lat->brownian(leaf) > 0.0 ? 1.0 : 0.0);
      xi[static_cast<std::size_t>(p)] =
          std::clamp(raw, barriers.lower()[leaf], barriers.upper()[leaf]);
    }
    barriers = barriers.with_terminal(std::move(xi));
  }
  return {std::move(lat), std::move(driver), std::move(barriers), std::nullopt};
}

StoppingRule build_theta(const ExperimentConfig& config, const LatticePtr& lattice) {
  if (config.theta.kind == "depth")
    return StoppingRule::at_depth(lattice, config.theta.depth);
  return StoppingRule::at_root(lattice);
}

}  // namespace dgl
