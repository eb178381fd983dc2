#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dgl/config.hpp"
#include "dgl/errors.hpp"
#include "dgl/experiments.hpp"
#include "doctest.h"

using namespace dgl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dgl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string(DGL_CLI_BIN) + " " + args;
  cmd += stdout_file.empty() ? " >/dev/null" : " >" + stdout_file.string();
  cmd += " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

// strips the trailing runtime_ms column, the one field that may vary between runs
std::string drop_last_column(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    out += line.substr(0, line.rfind(','));
    out += '\n';
  }
  return out;
}

ExperimentConfig desk_config(const fs::path& out_dir) {
  ExperimentConfig cfg;
  cfg.driver = {"linear", {-1.0, 0.5, 0.0}};
  cfg.barriers = {"separated", {2.0}};
  cfg.experiments = {{ExperimentKind::Solve, {}, {}},
                     {ExperimentKind::PenaltyStudy, {1, 4, 16}, {}},
                     {ExperimentKind::GameVerify, {}, {0.5, 0.1}},
                     {ExperimentKind::Maximality, {}, {0.5}},
                     {ExperimentKind::MokobodzkiReport, {}, {0.1}}};
  cfg.out_dir = out_dir.string();
  return cfg;
}

}  // namespace

TEST_CASE("run_experiments writes one artifact per experiment") {
  const fs::path dir = fresh_dir("artifacts");
  const RunResult result = run_experiments(desk_config(dir));

  CHECK(result.checks_pass);
  CHECK(!result.run_error);
  REQUIRE(result.summary_lines.size() == 5);
  for (const std::string& line : result.summary_lines)
    CHECK(line.find("PASS") != std::string::npos);

  CHECK(read_file(dir / "solve.csv").rfind("node_id,depth,B,L,U,Y,Z,dRp,dRm\n", 0) == 0);
  CHECK(read_file(dir / "penalty.csv")
            .rfind("n,sup_error,lower_monotone,upper_monotone,err_monotone,runtime_ms\n",
                   0) == 0);
  const std::string game_header =
      "theta_id,value_rbsde,value_upper,value_lower,saddle_pass,maximality_pass,"
      "witness_path\n";
  CHECK(read_file(dir / "game.csv").rfind(game_header, 0) == 0);
  CHECK(read_file(dir / "maximality.csv").rfind(game_header, 0) == 0);
  CHECK(read_file(dir / "threshold.csv")
            .rfind("path_id,gamma_depth,meet_kind,min_gap,tau_hat_depth,sigma_hat_depth,"
                   "checks_passed\n",
                   0) == 0);

  const std::string summary = read_file(dir / "summary.txt");
  CHECK(summary.rfind("seed: 0\n", 0) == 0);
  CHECK(summary.find("result: PASS") != std::string::npos);

  // one row per node / per path
  const std::string solve_csv = read_file(dir / "solve.csv");
  const std::string threshold_csv = read_file(dir / "threshold.csv");
  CHECK(std::count(solve_csv.begin(), solve_csv.end(), '\n') == 1 + 15);
  CHECK(std::count(threshold_csv.begin(), threshold_csv.end(), '\n') == 1 + 8);
}

TEST_CASE("run_experiments is byte-deterministic given the seed") {
  const fs::path dir1 = fresh_dir("det1");
  const fs::path dir2 = fresh_dir("det2");
  run_experiments(desk_config(dir1));
  run_experiments(desk_config(dir2));

  for (const char* name : {"solve.csv", "game.csv", "maximality.csv", "threshold.csv"})
    CHECK(read_file(dir1 / name) == read_file(dir2 / name));
  CHECK(drop_last_column(read_file(dir1 / "penalty.csv")) ==
        drop_last_column(read_file(dir2 / "penalty.csv")));
}

TEST_CASE("run_experiments survives a failing experiment and reports it") {
  const fs::path dir = fresh_dir("runerr");
  ExperimentConfig cfg;
  cfg.driver = {"linear", {5.0, 0.0, 0.0}};  // mono_y * dt = 5/3 trips the step guard
  cfg.experiments = {{ExperimentKind::Solve, {}, {}}, {ExperimentKind::Solve, {}, {}}};
  cfg.out_dir = dir.string();

  const RunResult result = run_experiments(cfg);
  CHECK(result.run_error);
  REQUIRE(result.summary_lines.size() == 2);
  CHECK(result.summary_lines[0].find("ERROR") != std::string::npos);
  CHECK(result.summary_lines[0].find("step-size guard") != std::string::npos);
  CHECK(read_file(dir / "summary.txt").find("result: ERROR") != std::string::npos);
}

TEST_CASE("run_experiments suffixes repeated experiment kinds") {
  const fs::path dir = fresh_dir("repeat");
  ExperimentConfig cfg;
  cfg.experiments = {{ExperimentKind::Solve, {}, {}}, {ExperimentKind::Solve, {}, {}}};
  cfg.out_dir = dir.string();
  const RunResult result = run_experiments(cfg);
  CHECK(result.checks_pass);
  CHECK(fs::exists(dir / "solve.csv"));
  CHECK(fs::exists(dir / "solve_2.csv"));
  CHECK(read_file(dir / "solve.csv") == read_file(dir / "solve_2.csv"));
}

TEST_CASE("emit_plot renders value and barriers along one path") {
  const fs::path dir = fresh_dir("plot");
  ExperimentConfig cfg;
  cfg.barriers = {"separated", {2.0}};

  SUBCASE("well-formed SVG with three polylines and two stop markers") {
    const fs::path file = dir / "d1.svg";
    emit_plot(cfg, "uud", file.string());
    const std::string svg = read_file(file);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    std::size_t polylines = 0, markers = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) ++polylines, ++pos;
    pos = 0;
    while ((pos = svg.find("<circle", pos)) != std::string::npos) ++markers, ++pos;
    CHECK(polylines == 3);
    CHECK(markers == 2);
  }
  SUBCASE("single-step lattice gives two-point polylines") {
    cfg.steps = 1;
    const fs::path file = dir / "tiny.svg";
    emit_plot(cfg, "u", file.string());
    const std::string svg = read_file(file);
    const std::size_t start = svg.find("points=\"");
    REQUIRE(start != std::string::npos);
    const std::string points =
        svg.substr(start + 8, svg.find('"', start + 8) - start - 8);
    // two "x,y " pairs
    CHECK(std::count(points.begin(), points.end(), ',') == 2);
  }
  SUBCASE("selector errors name the selector") {
    CHECK_THROWS_WITH_AS(emit_plot(cfg, "uux", (dir / "x.svg").string()),
                         doctest::Contains("uux"), Error);
    CHECK_THROWS_WITH_AS(emit_plot(cfg, "uu", (dir / "x.svg").string()),
                         doctest::Contains("uu"), Error);
    CHECK(!fs::exists(dir / "x.svg"));
  }
  SUBCASE("recombining lattices have no single-path view") {
    cfg.tree = "recombining";
    CHECK_THROWS_WITH_AS(emit_plot(cfg, "uud", (dir / "x.svg").string()),
                         doctest::Contains("full_binary"), Error);
  }
}

TEST_CASE("cli exit codes follow the outcome") {
  const fs::path dir = fresh_dir("exitcodes");

  SUBCASE("0: all asserted checks pass") {
    write_file(dir / "ok.json", R"({"experiments": [{"kind": "solve"}]})");
    CHECK(run_cli("run --config " + (dir / "ok.json").string() + " --out-dir " +
                  (dir / "ok_out").string()) == 0);
    CHECK(fs::exists(dir / "ok_out" / "solve.csv"));
  }
  SUBCASE("1: an asserted check honestly fails") {
    // a coarse gap tolerance declares the barriers met at the root, but with
    // eps far below the actual band the eps-rules genuinely stop later
    write_file(dir / "fail.json", R"({
      "grid": {"steps": 4},
      "barriers": {"family": "separated", "params": [0.4]},
      "tolerances": {"gap": 0.5},
      "experiments": [{"kind": "mokobodzki_report", "eps": [0.01]}]})");
    CHECK(run_cli("run --config " + (dir / "fail.json").string() + " --out-dir " +
                  (dir / "fail_out").string()) == 1);
    CHECK(read_file(dir / "fail_out" / "summary.txt").find("result: FAIL") !=
          std::string::npos);
  }
  SUBCASE("2: configuration rejected") {
    write_file(dir / "bad.json", R"({"grid": {"steps": 10},
                                     "experiments": [{"kind": "game_verify"}]})");
    CHECK(run_cli("run --config " + (dir / "bad.json").string()) == 2);
    write_file(dir / "mangled.json", "{\"grid\": ");
    CHECK(run_cli("run --config " + (dir / "mangled.json").string()) == 2);
    CHECK(run_cli("run --config " + (dir / "no_such_file.json").string()) == 2);
  }
  SUBCASE("3: runtime failure") {
    write_file(dir / "guard.json",
               R"({"driver": {"preset": "linear", "params": [5.0, 0.0, 0.0]}})");
    CHECK(run_cli("run --config " + (dir / "guard.json").string() + " --out-dir " +
                  (dir / "guard_out").string()) == 3);
    write_file(dir / "plotcfg.json", "{}");
    CHECK(run_cli("plot --config " + (dir / "plotcfg.json").string() +
                  " --path uux --out " + (dir / "p.svg").string()) == 3);
  }
}

TEST_CASE("cli validate prints the canonical config") {
  const fs::path dir = fresh_dir("validate");
  const std::string doc = R"({
    "grid": {"horizon": 2.0, "steps": 5},
    "driver": {"preset": "monotone_cubic", "params": [0.5]},
    "barriers": {"family": "closing_gap", "params": [1.0]},
    "theta": {"kind": "depth", "depth": 2},
    "seed": 11
  })";
  write_file(dir / "cfg.json", doc);
  const fs::path out = dir / "canonical.json";
  CHECK(run_cli("validate --config " + (dir / "cfg.json").string(), out) == 0);
  CHECK(read_file(out) == serialize_config(parse_config(doc)));
  // and the canonical form itself round-trips through the binary
  CHECK(run_cli("validate --config " + out.string(), dir / "canonical2.json") == 0);
  CHECK(read_file(dir / "canonical2.json") == read_file(out));
}

TEST_CASE("cli run honors --seed and --out-dir overrides") {
  const fs::path dir = fresh_dir("overrides");
  write_file(dir / "cfg.json", R"({"experiments": [{"kind": "solve"}], "seed": 1})");
  CHECK(run_cli("run --config " + (dir / "cfg.json").string() + " --out-dir " +
                (dir / "override_out").string() + " --seed 5") == 0);
  CHECK(read_file(dir / "override_out" / "summary.txt").rfind("seed: 5\n", 0) == 0);
}

TEST_CASE("cli plot writes the figure") {
  const fs::path dir = fresh_dir("cliplot");
  write_file(dir / "cfg.json", R"({"barriers": {"family": "separated", "params": [2.0]}})");
  const fs::path svg = dir / "out.svg";
  CHECK(run_cli("plot --config " + (dir / "cfg.json").string() + " --path uud --out " +
                svg.string()) == 0);
  const std::string body = read_file(svg);
  CHECK(body.rfind("<svg", 0) == 0);
  CHECK(body.find("</svg>") != std::string::npos);
}
