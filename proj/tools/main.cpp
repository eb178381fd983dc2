// dglab: command-line front end for the Dynkin-game laboratory.
//
//   dglab run      --config cfg.json [--out-dir DIR] [--seed N]
//   dglab validate --config cfg.json
//   dglab plot     --config cfg.json --path uud [--out plot.svg]
//
// Exit codes: 0 success, 1 an asserted experiment check failed,
// 2 invalid configuration, 3 runtime failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dgl/config.hpp"
#include "dgl/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dgl::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

dgl::ExperimentConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return dgl::ExperimentConfig{};
  return dgl::parse_config(read_file(config_path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dglab: values, saddle points, and barrier-threshold reports for "
      "discrete-time Dynkin games driven by reflected BSDEs on binary lattices"};
  app.require_subcommand(1);

  std::string config_path, out_dir, selector, plot_file = "plot.svg";
  std::int64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "run the configured experiments");
  run->add_option("--config", config_path, "JSON configuration file");
  run->add_option("--out-dir", out_dir, "override the output directory");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override the RNG seed")
                              ->check(CLI::NonNegativeNumber);

  CLI::App* validate = app.add_subcommand(
      "validate", "check a configuration and print its canonical form");
  validate->add_option("--config", config_path, "JSON configuration file");

  CLI::App* plot = app.add_subcommand(
      "plot", "render value and barriers along one lattice path as SVG");
  plot->add_option("--config", config_path, "JSON configuration file");
  plot->add_option("--path", selector, "path selector, one 'u' or 'd' per step")
      ->required();
  plot->add_option("--out", plot_file, "output SVG file");

  CLI11_PARSE(app, argc, argv);

  try {
    dgl::ExperimentConfig config = load_config(config_path);
    if (validate->parsed()) {
      std::cout << dgl::serialize_config(config);
      return 0;
    }
    if (plot->parsed()) {
      dgl::emit_plot(config, selector, plot_file);
      std::cout << "wrote " << plot_file << "\n";
      return 0;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed_opt->count() > 0) config.seed = static_cast<std::uint64_t>(seed);
    const dgl::RunResult result = dgl::run_experiments(config);
    for (const std::string& line : result.summary_lines) std::cout << line << "\n";
    if (result.run_error) {
      std::cout << "result: ERROR\n";
      return 3;
    }
    std::cout << "result: " << (result.checks_pass ? "PASS" : "FAIL") << "\n";
    return result.checks_pass ? 0 : 1;
  } catch (const dgl::ConfigError& err) {
    std::cerr << err.what() << "\n";
    return 2;
  } catch (const dgl::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
}
