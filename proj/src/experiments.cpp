#include "dgl/experiments.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dgl/game.hpp"
#include "dgl/suites.hpp"
#include "dgl/threshold.hpp"

namespace dgl {

namespace {

// 17 significant digits round-trip any double; CSV fields must be byte-stable
std::string fmt17(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

// shortest round-trip form, for SVG coordinates
std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) : path_(path) {
    out_.open(path);
    if (!out_) throw Error("cannot open '" + path.string() + "' for writing");
    out_ << header << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i)
      out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw Error("failed writing '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

const char* meet_kind_name(MeetKind kind) {
  switch (kind) {
    case MeetKind::AtMeet: return "at_meet";
    case MeetKind::LeftMeet: return "left_meet";
    case MeetKind::NoMeet: return "no_meet";
  }
  return "no_meet";
}

bool run_solve(const ExperimentConfig& cfg, const std::filesystem::path& file,
               std::string& note) {
  const ProblemSpec spec = build_problem(cfg);
  const SolutionTriple sol = solve_rbsde(spec);
  const SolutionAudit audit = audit_solution(spec, sol);

  CsvFile csv(file, "node_id,depth,B,L,U,Y,Z,dRp,dRm");
  const Lattice& lat = *spec.lattice;
  for (int d = 0; d <= lat.steps(); ++d)
    for (std::int64_t p = 0; p < lat.width(d); ++p) {
      const NodeRef n{d, p};
      csv.row({std::to_string(lat.index(n)), std::to_string(d), fmt17(lat.brownian(n)),
               fmt17(spec.barriers.lower()[n]), fmt17(spec.barriers.upper()[n]),
               fmt17(sol.y[n]), fmt17(sol.z[n]), fmt17(sol.r_plus[n]),
               fmt17(sol.r_minus[n])});
    }
  csv.close();
  note = std::to_string(lat.node_count()) + " nodes, audit " +
         (audit.pass() ? "clean" : "VIOLATED");
  return audit.pass();
}

bool run_penalty(const ExperimentConfig& cfg, const ExperimentSpec& e,
                 const std::filesystem::path& file, std::string& note) {
  const ProblemSpec spec = build_problem(cfg);
  const auto rows = penalty_study(spec, e.penalty_n);

  CsvFile csv(file, "n,sup_error,lower_monotone,upper_monotone,err_monotone,runtime_ms");
  bool ordered = true;
  for (const PenaltyRow& r : rows) {
    ordered = ordered && r.lower_monotone && r.upper_monotone && r.err_monotone;
    csv.row({fmt17(r.n), fmt17(r.sup_error), std::to_string(r.lower_monotone ? 1 : 0),
             std::to_string(r.upper_monotone ? 1 : 0),
             std::to_string(r.err_monotone ? 1 : 0), fmt17(r.runtime_ms)});
  }
  csv.close();
  note = std::to_string(rows.size()) + " strengths, final error " +
         fmt17(rows.empty() ? 0.0 : rows.back().sup_error) +
         (ordered ? ", monotone" : ", NOT monotone");
  return ordered;
}

bool run_game(const ExperimentConfig& cfg, const ExperimentSpec& e, bool with_maximality,
              const std::filesystem::path& file, std::string& note) {
  const ProblemSpec spec = build_problem(cfg);
  const StoppingRule theta = build_theta(cfg, spec.lattice);
  const GameReport report = game_verify(spec, theta, e.eps, with_maximality);

  const bool saddle_ok = report.star_check.pass && report.hat_check.pass;
  bool values_ok = true;
  for (std::size_t k = 0; k < report.frontier.size(); ++k)
    values_ok = values_ok &&
                std::abs(report.value_upper[k] - report.value_lower[k]) <= 1e-9 &&
                std::abs(report.value_rbsde[k] - report.value_upper[k]) <= 1e-9;
  const bool max_ok = !report.maximality || report.maximality->pass();

  CsvFile csv(file,
              "theta_id,value_rbsde,value_upper,value_lower,saddle_pass,"
              "maximality_pass,witness_path");
  const Lattice& lat = *spec.lattice;
  for (std::size_t k = 0; k < report.frontier.size(); ++k)
    csv.row({std::to_string(lat.index(report.frontier[k])), fmt17(report.value_rbsde[k]),
             fmt17(report.value_upper[k]), fmt17(report.value_lower[k]),
             std::to_string(saddle_ok ? 1 : 0),
             report.maximality ? std::to_string(report.maximality->pass() ? 1 : 0) : "",
             report.maximality ? quoted(report.maximality->witness) : quoted("")});
  csv.close();

  std::ostringstream os;
  os << report.frontier.size() << " frontier node(s), value identity "
     << (values_ok ? "ok" : "BROKEN") << ", saddles " << (saddle_ok ? "pass" : "FAIL");
  if (report.maximality)
    os << ", maximality " << (report.maximality->pass() ? "pass" : "FAIL") << " over "
       << report.maximality->saddle_pairs << " saddle pair(s)";
  note = os.str();
  return saddle_ok && values_ok && max_ok;
}

bool run_mokobodzki(const ExperimentConfig& cfg, const ExperimentSpec& e,
                    const std::filesystem::path& file, std::string& note) {
  const ProblemSpec spec = build_problem(cfg);
  const StoppingRule theta = build_theta(cfg, spec.lattice);
  const ThresholdDiagnostics diag =
      threshold_diagnostics(spec, theta, e.eps.front(), cfg.tolerances.gap);

  CsvFile csv(file,
              "path_id,gamma_depth,meet_kind,min_gap,tau_hat_depth,sigma_hat_depth,"
              "checks_passed");
  for (std::size_t i = 0; i < diag.gamma_depth.size(); ++i) {
    const int passed = (diag.check_a[i] ? 1 : 0) + (diag.check_b[i] ? 1 : 0) +
                       (diag.check_c[i] ? 1 : 0);
    csv.row({std::to_string(i), std::to_string(diag.gamma_depth[i]),
             meet_kind_name(diag.threshold.meet_kind[i]), fmt17(diag.threshold.min_gap[i]),
             std::to_string(diag.tau_hat_depth[i]), std::to_string(diag.sigma_hat_depth[i]),
             std::to_string(passed)});
  }
  csv.close();
  note = std::to_string(diag.gamma_depth.size()) + " paths, asserted checks " +
         (diag.pass_asserted() ? "pass" : "FAIL") +
         (diag.pass_c ? "" : " (one-sided-quiescence diagnostic flagged)");
  return diag.pass_asserted();
}

bool run_property(const ExperimentConfig& cfg, std::vector<std::string>& lines,
                  std::string& note) {
  const std::vector<CheckResult> results = run_all_suites(cfg.seed);
  bool pass = true;
  std::size_t passed = 0;
  for (const CheckResult& r : results) {
    pass = pass && r.pass;
    passed += r.pass ? 1 : 0;
    lines.push_back("    - " + r.name + ": " + (r.pass ? "PASS" : "FAIL") + " (" +
                    r.detail + ")");
  }
  note = std::to_string(passed) + "/" + std::to_string(results.size()) + " suites passed";
  return pass;
}

}  // namespace

RunResult run_experiments(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  RunResult result;
  const fs::path out_dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory '" + out_dir.string() + "'");

  std::vector<std::string> kinds_seen;
  auto csv_name = [&](const std::string& stem) {
    const auto repeats = std::count(kinds_seen.begin(), kinds_seen.end(), stem);
    kinds_seen.push_back(stem);
    return repeats == 0 ? stem + ".csv" : stem + "_" + std::to_string(repeats + 1) + ".csv";
  };

  for (std::size_t i = 0; i < config.experiments.size(); ++i) {
    const ExperimentSpec& e = config.experiments[i];
    const std::string kind = experiment_kind_name(e.kind);
    std::string note, file;
    bool pass = false;
    std::vector<std::string> extra_lines;
    try {
      switch (e.kind) {
        case ExperimentKind::Solve:
          file = csv_name("solve");
          pass = run_solve(config, out_dir / file, note);
          break;
        case ExperimentKind::PenaltyStudy:
          file = csv_name("penalty");
          pass = run_penalty(config, e, out_dir / file, note);
          break;
        case ExperimentKind::GameVerify:
          file = csv_name("game");
          pass = run_game(config, e, false, out_dir / file, note);
          break;
        case ExperimentKind::Maximality:
          file = csv_name("maximality");
          pass = run_game(config, e, true, out_dir / file, note);
          break;
        case ExperimentKind::MokobodzkiReport:
          file = csv_name("threshold");
          pass = run_mokobodzki(config, e, out_dir / file, note);
          break;
        case ExperimentKind::PropertySuite:
          pass = run_property(config, extra_lines, note);
          break;
      }
      result.checks_pass = result.checks_pass && pass;
      std::string line = "[" + std::to_string(i + 1) + "] " + kind + ": " +
                         (pass ? "PASS" : "FAIL") + " - " + note;
      if (!file.empty()) line += " -> " + file;
      result.summary_lines.push_back(std::move(line));
    } catch (const Error& err) {
      result.run_error = true;
      result.summary_lines.push_back("[" + std::to_string(i + 1) + "] " + kind +
                                     ": ERROR - " + err.what());
    }
    for (std::string& l : extra_lines) result.summary_lines.push_back(std::move(l));
  }

  std::ofstream summary(out_dir / "summary.txt");
  if (!summary) throw Error("cannot open summary.txt for writing");
  summary << "seed: " << config.seed << "\n";
  for (const std::string& line : result.summary_lines) summary << line << "\n";
  summary << "result: "
          << (result.run_error ? "ERROR" : result.checks_pass ? "PASS" : "FAIL") << "\n";
  summary.close();
  if (!summary) throw Error("failed writing summary.txt");
  return result;
}

void emit_plot(const ExperimentConfig& config, const std::string& path_selector,
               const std::string& out_file) {
  const ProblemSpec spec = build_problem(config);
  const LatticePtr& lat = spec.lattice;
  if (lat->kind() != TreeKind::FullBinary)
    throw Error("plots follow a single path and need tree full_binary");
  const int n = lat->steps();
  if (static_cast<int>(path_selector.size()) != n)
    throw Error("path selector '" + path_selector + "' must have one move per step (" +
                std::to_string(n) + ")");
  for (const char c : path_selector)
    if (c != 'u' && c != 'd')
      throw Error("invalid path selector '" + path_selector + "' (moves are 'u' or 'd')");

  std::vector<NodeRef> path{{0, 0}};
  for (int d = 0; d < n; ++d)
    path.push_back({d + 1, path.back().pos * 2 + (path_selector[static_cast<std::size_t>(d)] == 'd')});
  const std::int64_t leaf = path.back().pos;

  const SolutionTriple sol = solve_rbsde(spec);
  const StoppingRule theta = StoppingRule::at_root(lat);
  const SaddleSet saddles = extract_saddles(spec, theta, {});
  const int star_depth = std::min(saddles.star.tau.stop_depth_on_path(leaf),
                                  saddles.star.sigma.stop_depth_on_path(leaf));
  const int hat_depth = std::min(saddles.hat.tau.stop_depth_on_path(leaf),
                                 saddles.hat.sigma.stop_depth_on_path(leaf));

  double lo = sol.y[path[0]], hi = lo;
  for (const NodeRef node : path)
    for (const double v : {sol.y[node], spec.barriers.lower()[node], spec.barriers.upper()[node]}) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double width = 640, height = 400, margin = 56;
  auto x_of = [&](int d) { return margin + (width - 2 * margin) * d / n; };
  auto y_of = [&](double v) {
    return height - margin - (height - 2 * margin) * (v - lo) / (hi - lo);
  };
  auto polyline = [&](const AdaptedProcess& p, const char* color, const char* dash) {
    std::string pts;
    for (int d = 0; d <= n; ++d)
      pts += fmt(x_of(d)) + "," + fmt(y_of(p[path[static_cast<std::size_t>(d)]])) + " ";
    return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\"" + dash + " points=\"" + pts + "\"/>\n";
  };
  auto marker = [&](int depth, const char* color, const char* label) {
    const double cx = x_of(depth), cy = y_of(sol.y[path[static_cast<std::size_t>(depth)]]);
    return "  <circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) +
           "\" r=\"5\" fill=\"" + std::string(color) + "\"/>\n  <text x=\"" + fmt(cx + 8) +
           "\" y=\"" + fmt(cy - 8) + "\" font-size=\"12\">" + label + "</text>\n";
  };

  std::ofstream out(out_file);
  if (!out) throw Error("cannot open '" + out_file + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "  <text x=\"" << margin << "\" y=\"24\" font-size=\"14\">value and barriers along path "
      << path_selector << " (stops: star, hat)</text>\n";
  out << polyline(spec.barriers.upper(), "#c44e52", "");
  out << polyline(spec.barriers.lower(), "#55a868", "");
  out << polyline(sol.y, "#4c72b0", "");
  out << marker(star_depth, "#4c72b0", "star");
  out << marker(hat_depth, "#dd8452", "hat");
  out << "</svg>\n";
  out.close();
  if (!out) throw Error("failed writing '" + out_file + "'");
}

}  // namespace dgl
