#pragma once

#include <string>
#include <vector>

#include "dgl/config.hpp"

namespace dgl {

struct RunResult {
  bool checks_pass = true;  // every asserted check across all experiments held
  bool run_error = false;   // an experiment aborted (solver/guard/IO failure)
  std::vector<std::string> summary_lines;
};

// Runs the configured experiments in order, writing one CSV per experiment
// (solve.csv, penalty.csv, game.csv, maximality.csv, threshold.csv; repeated
// kinds get _2, _3, ... suffixes) plus summary.txt under config.out_dir.
// Numeric CSV fields carry 17 significant digits, so outputs are byte-stable
// across runs of the same config and seed (the runtime_ms column of
// penalty.csv is wall-clock and excepted). Failures of asserted checks are
// reported, not thrown; aborted experiments set run_error.
RunResult run_experiments(const ExperimentConfig& config);

// Writes a static SVG of Y, L, U against time along one root-to-leaf path of
// the configured instance ("uud" = up, up, down; one move per step), marking
// the realized stop depths of the star and hat pairs. Throws Error if the
// selector has the wrong length or characters outside {u, d}.
void emit_plot(const ExperimentConfig& config, const std::string& path_selector,
               const std::string& out_file);

}  // namespace dgl
