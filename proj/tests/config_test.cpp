#include <string>

#include "dgl/config.hpp"
#include "dgl/errors.hpp"
#include "doctest.h"

using namespace dgl;

namespace {

std::string error_text(const std::string& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& err) {
    return err.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse_config fills defaults") {
  SUBCASE("minimal document") {
    const ExperimentConfig cfg = parse_config(R"({
      "grid": {"horizon": 1, "steps": 3},
      "driver": {"preset": "zero"},
      "barriers": {"family": "separated", "params": [1]},
      "terminal": {"preset": "bt"}
    })");
    CHECK(cfg == ExperimentConfig{});
  }
  SUBCASE("empty object is the default config") {
    CHECK(parse_config("{}") == ExperimentConfig{});
  }
  SUBCASE("experiment options default per kind") {
    const ExperimentConfig cfg = parse_config(
        R"({"experiments": [{"kind": "penalty_study"}, {"kind": "game_verify"}]})");
    REQUIRE(cfg.experiments.size() == 2);
    CHECK(cfg.experiments[0].kind == ExperimentKind::PenaltyStudy);
    CHECK(cfg.experiments[0].penalty_n == std::vector<double>{1, 4, 16, 64, 256, 1024, 4096});
    CHECK(cfg.experiments[1].kind == ExperimentKind::GameVerify);
    CHECK(cfg.experiments[1].eps == std::vector<double>{0.5, 0.1, 0.02});
  }
}

TEST_CASE("serialize_config round-trips") {
  SUBCASE("default config") {
    CHECK(parse_config(serialize_config(ExperimentConfig{})) == ExperimentConfig{});
  }
  SUBCASE("fully customized config") {
    ExperimentConfig cfg;
    cfg.horizon = 2.5;
    cfg.steps = 8;
    cfg.driver = {"linear", {-1.0, 0.5, 0.25}};
    cfg.barriers = {"closing_gap", {0.5, 0.05}};
    cfg.terminal = {"constant", {0.125}};
    cfg.theta = {"depth", 4};
    cfg.experiments = {{ExperimentKind::Solve, {}, {}},
                       {ExperimentKind::PenaltyStudy, {2, 8, 32}, {}},
                       {ExperimentKind::MokobodzkiReport, {}, {0.25}}};
    cfg.tolerances.gap = 1e-8;
    cfg.seed = 99;
    cfg.out_dir = "artifacts/run1";
    // options irrelevant to a kind are not serialized, so normalize them the
    // way a parse of the canonical document would
    ExperimentConfig expected = cfg;
    expected.experiments[0].penalty_n = ExperimentSpec{}.penalty_n;
    expected.experiments[0].eps = ExperimentSpec{}.eps;
    expected.experiments[1].eps = ExperimentSpec{}.eps;
    expected.experiments[2].penalty_n = ExperimentSpec{}.penalty_n;
    CHECK(parse_config(serialize_config(cfg)) == expected);
  }
  SUBCASE("recombining tree") {
    ExperimentConfig cfg;
    cfg.tree = "recombining";
    cfg.steps = 64;
    CHECK(parse_config(serialize_config(cfg)) == cfg);
  }
}

TEST_CASE("parse_config aggregates every violation") {
  const std::string msg = error_text(R"({
    "grid": {"horizon": -1, "steps": 10},
    "driver": {"preset": "foo"},
    "barriers": {"family": "wavy", "params": []},
    "experiments": [{"kind": "game_verify"}]
  })");
  CHECK(msg.find("4 problems") != std::string::npos);
  CHECK(msg.find("horizon") != std::string::npos);
  CHECK(msg.find("foo") != std::string::npos);
  CHECK(msg.find("wavy") != std::string::npos);
  CHECK(msg.find("steps <= 4") != std::string::npos);
}

TEST_CASE("parse_config rejects unknown keys at every level") {
  CHECK(error_text(R"({"grind": {}})").find("grind") != std::string::npos);
  CHECK(error_text(R"({"grid": {"dt": 0.1}})").find("dt") != std::string::npos);
  CHECK(error_text(R"({"driver": {"name": "zero"}})").find("name") != std::string::npos);
  CHECK(error_text(R"({"experiments": [{"kind": "solve", "n": [1]}]})").find("n") !=
        std::string::npos);
  CHECK(error_text(R"({"tolerances": {"slack": 1e-9}})").find("slack") !=
        std::string::npos);
}

TEST_CASE("parse_config reports parse errors with their position") {
  const std::string msg = error_text("{\"grid\": }");
  CHECK(msg.find("config parse error") != std::string::npos);
  // nlohmann annotates the byte offset of the failure
  CHECK(msg.find("10") != std::string::npos);
}

TEST_CASE("parse_config enforces experiment guards") {
  SUBCASE("game_verify step cap is named") {
    const std::string msg =
        error_text(R"({"grid": {"steps": 10}, "experiments": [{"kind": "game_verify"}]})");
    CHECK(msg.find("game_verify") != std::string::npos);
    CHECK(msg.find("steps <= 4") != std::string::npos);
  }
  SUBCASE("maximality is capped tighter") {
    CHECK(error_text(
              R"({"grid": {"steps": 4}, "experiments": [{"kind": "maximality"}]})")
              .find("steps <= 3") != std::string::npos);
  }
  SUBCASE("rule enumeration requires full_binary") {
    const std::string msg = error_text(
        R"({"tree": {"kind": "recombining"}, "experiments": [{"kind": "game_verify"}]})");
    CHECK(msg.find("full_binary") != std::string::npos);
  }
  SUBCASE("solve has no extra guard") {
    const ExperimentConfig cfg = parse_config(
        R"({"grid": {"steps": 12}, "experiments": [{"kind": "solve"}]})");
    CHECK(cfg.steps == 12);
  }
  SUBCASE("unknown kind") {
    CHECK(error_text(R"({"experiments": [{"kind": "meditate"}]})").find("meditate") !=
          std::string::npos);
  }
  SUBCASE("empty eps grid") {
    CHECK(error_text(R"({"experiments": [{"kind": "game_verify", "eps": []}]})")
              .find("eps") != std::string::npos);
  }
  SUBCASE("nonpositive penalty strength") {
    CHECK(error_text(R"({"experiments": [{"kind": "penalty_study", "n": [4, 0]}]})")
              .find("positive") != std::string::npos);
  }
}

TEST_CASE("parse_config validates grid, theta, tolerances, and seed") {
  CHECK(error_text(R"({"grid": {"steps": 0}})").find("steps") != std::string::npos);
  CHECK(error_text(R"({"grid": {"steps": 23}})").find("22") != std::string::npos);
  CHECK(error_text(R"({"tree": {"kind": "recombining"}, "grid": {"steps": 4097}})")
            .find("4096") != std::string::npos);
  CHECK(error_text(R"({"tree": {"kind": "ternary"}})").find("full_binary") !=
        std::string::npos);
  CHECK(error_text(R"({"theta": {"kind": "depth", "depth": 7}})").find("depth") !=
        std::string::npos);
  CHECK(error_text(R"({"theta": {"kind": "depth", "depth": -1}})").find("depth") !=
        std::string::npos);
  CHECK(error_text(R"({"theta": {"kind": "root", "depth": 2}})").find("only valid") !=
        std::string::npos);
  CHECK(error_text(R"({"theta": {"kind": "sometimes"}})").find("sometimes") !=
        std::string::npos);
  CHECK(error_text(R"({"tolerances": {"gap": 0}})").find("gap") != std::string::npos);
  CHECK(error_text(R"({"tolerances": {"contact": 1e-9}})").find("1e-10") !=
        std::string::npos);
  CHECK(error_text(R"({"tolerances": {"solver": 1e-12}})").find("solver") !=
        std::string::npos);
  CHECK(error_text(R"({"seed": -3})").find("seed") != std::string::npos);
  CHECK(error_text(R"({"seed": 1.5})").find("seed") != std::string::npos);
  CHECK(error_text(R"({"out_dir": ""})").find("out_dir") != std::string::npos);
  CHECK(error_text(R"({"experiments": []})").find("experiments") != std::string::npos);
}

TEST_CASE("build_problem materializes the configured instance") {
  SUBCASE("defaults") {
    const ProblemSpec spec = build_problem(ExperimentConfig{});
    CHECK(spec.lattice->kind() == TreeKind::FullBinary);
    CHECK(spec.lattice->steps() == 3);
    CHECK(spec.driver.label == "zero");
    // "bt" terminal: the barrier family already pays the walk endpoint
    const auto& leaves = spec.barriers.terminal_values();
    for (std::int64_t p = 0; p < spec.lattice->width(3); ++p)
      CHECK(leaves[static_cast<std::size_t>(p)] ==
            spec.lattice->brownian({3, p}));
    CHECK_NOTHROW(spec.validate());
  }
  SUBCASE("constant terminal is clamped into the terminal band") {
    ExperimentConfig cfg;
    cfg.terminal = {"constant", {100.0}};
    const ProblemSpec spec = build_problem(cfg);
    for (std::int64_t p = 0; p < spec.lattice->width(3); ++p) {
      const NodeRef leaf{3, p};
      CHECK(spec.barriers.terminal(p) == spec.barriers.upper()[leaf]);
    }
    CHECK_NOTHROW(spec.validate());
  }
  SUBCASE("coin terminal pays on positive endpoints") {
    ExperimentConfig cfg;
    cfg.steps = 2;
    cfg.barriers = {"separated", {10.0}};  // wide band: no clamping
    cfg.terminal = {"coin", {}};
    const ProblemSpec spec = build_problem(cfg);
    CHECK(spec.barriers.terminal(0) == 1.0);  // uu: endpoint > 0
    CHECK(spec.barriers.terminal(1) == 0.0);  // ud: endpoint 0
    CHECK(spec.barriers.terminal(3) == 0.0);  // dd: endpoint < 0
  }
  SUBCASE("recombining lattice") {
    ExperimentConfig cfg;
    cfg.tree = "recombining";
    cfg.steps = 16;
    const ProblemSpec spec = build_problem(cfg);
    CHECK(spec.lattice->kind() == TreeKind::Recombining);
    CHECK(spec.lattice->width(16) == 17);
  }
}

TEST_CASE("build_theta picks the evaluation frontier") {
  const ExperimentConfig root_cfg;
  const LatticePtr lat = build_problem(root_cfg).lattice;
  CHECK(build_theta(root_cfg, lat) == StoppingRule::at_root(lat));

  ExperimentConfig depth_cfg;
  depth_cfg.theta = {"depth", 2};
  CHECK(build_theta(depth_cfg, lat) == StoppingRule::at_depth(lat, 2));
}
