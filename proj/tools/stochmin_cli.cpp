/*
 Copyright 2026 The stochmin Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Command-line front end: check, solve, simulate, oracle and lq.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "stochmin/errors.hpp"
#include "stochmin/lqfixed.hpp"
#include "stochmin/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stochmin;

namespace {

struct Options {
  std::string config;
  int paths = 10000;
  std::optional<int> steps;
  std::uint64_t seed = 42;
  int tree_depth = 12;
  std::string out_dir = ".";
  int export_paths = 10;
  std::string dump_qp;
};

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kUncontrollable = 3, kNumeric = 4 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError:
    case ErrorCode::kMissingField:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInvalidField:
    case ErrorCode::kValidationFailed:
      return kInvalid;
    case ErrorCode::kRankDeficientD:
    case ErrorCode::kNotControllable:
    case ErrorCode::kInfeasible:
      return kUncontrollable;
    case ErrorCode::kInvalidArgument:
      return kUsage;
    default:
      return kNumeric;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

json findings_json(const ValidationReport& report) {
  json out = json::array();
  for (const Finding& f : report.findings) {
    out.push_back({{"code", f.code}, {"message", f.message}, {"node", f.node},
                   {"node_end", f.node_end},
                   {"severity", f.severity == Severity::kError ? "error" : "warning"}});
  }
  return out;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> indexed(const std::string& name, int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(name + std::to_string(i));
  return out;
}

void append(std::vector<std::string>& cells, const Eigen::Ref<const Vector>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) cells.push_back(num(v(i)));
}

void append_matrix(std::vector<std::string>& cells, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) cells.push_back(num(m(i, j)));
  }
}

std::vector<std::string> matrix_header(const std::string& name, int rows, int cols) {
  std::vector<std::string> out;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out.push_back(name + std::to_string(i) + std::to_string(j));
  }
  return out;
}

void write_riccati(const fs::path& dir, const RiccatiSolution& sol) {
  const int n = static_cast<int>(sol.Pbar.front().rows());
  std::vector<std::string> header{"t"};
  for (auto& h : matrix_header("Pbar", n, n)) header.push_back(h);
  header.push_back("min_eig");
  Csv csv(dir / "riccati.csv", header);
  for (int k = 0; k < sol.grid.nodes(); ++k) {
    std::vector<std::string> cells{num(sol.grid.t(k))};
    append_matrix(cells, sol.Pbar[k]);
    cells.push_back(num(sol.min_eig[k]));
    csv.row(cells);
  }
}

void write_bsde(const fs::path& dir, const BsdeSolution& pq) {
  const int n = static_cast<int>(pq.alpha.front().size());
  std::vector<std::string> header{"t"};
  for (auto& h : indexed("alpha", n)) header.push_back(h);
  for (auto& h : indexed("beta", n)) header.push_back(h);
  Csv csv(dir / "bsde.csv", header);
  for (int k = 0; k < pq.grid.nodes(); ++k) {
    std::vector<std::string> cells{num(pq.grid.t(k))};
    append(cells, pq.alpha[k]);
    append(cells, pq.beta[k]);
    csv.row(cells);
  }
}

void write_gramian(const fs::path& dir, const GramianReport& g) {
  Csv csv(dir / "gramian.csv", {"index", "eigenvalue"});
  for (Eigen::Index i = 0; i < g.eigenvalues.size(); ++i) {
    csv.row({std::to_string(i), num(g.eigenvalues(i))});
  }
}

json gramian_json(const GramianReport& g) {
  return {{"matrix", to_json(g.gramian)},
          {"eigenvalues", to_json(g.eigenvalues)},
          {"rank", g.rank},
          {"paths", g.paths_used},
          {"standard_error", g.standard_error}};
}

json solution_json(const MinimumEnergySolution& sol) {
  return {{"controllable", sol.verdict.controllable},
          {"margin", sol.verdict.margin},
          {"Pbar0", to_json(sol.pbar.Pbar.front())},
          {"psd", sol.pbar.psd},
          {"symmetric_residual", sol.pbar.symmetric_residual},
          {"p0", to_json(sol.pq.alpha.front())},
          {"K", to_json(sol.K)},
          {"J_moment", expected_optimal_cost(sol.loop, sol.K, sol.spec.x0, sol.spec.target)}};
}

/// Runs the closed loop on the batch, exporting per-path files.
json simulate_json(const MinimumEnergySolution& sol, const BrownianBatch& batch,
                   const fs::path& dir, int export_paths) {
  const int n = sol.spec.n;
  const int m = sol.spec.m;
  std::vector<std::string> header{"path", "t"};
  for (auto& h : indexed("Y", n)) header.push_back(h);
  for (auto& h : indexed("v", m - n)) header.push_back(h);
  for (auto& h : indexed("z", n)) header.push_back(h);
  for (auto& h : indexed("u", m)) header.push_back(h);
  Csv traj(dir / "trajectories.csv", header);
  std::vector<std::string> term_header{"path", "W_T"};
  for (auto& h : indexed("x_T", n)) term_header.push_back(h);
  term_header.push_back("squared_error");
  Csv terminal(dir / "terminal.csv", term_header);

  EvaluationOptions options;
  options.observer = [&](const HamiltonianRun& run, const PathField& x,
                         const BrownianBatch& part) {
    const int N = part.steps();
    for (int p = 0; p < part.paths(); ++p) {
      const int global = part.first_path() + p;
      const double wT = part.terminal(p);
      std::vector<std::string> cells{std::to_string(global), num(wT)};
      append(cells, x.at(p, N));
      cells.push_back(num((x.at(p, N) - sol.spec.target.evaluate(wT)).squaredNorm()));
      terminal.row(cells);
      if (global >= export_paths) continue;
      for (int k = 0; k <= N; ++k) {
        std::vector<std::string> row{std::to_string(global), num(part.grid().t(k))};
        append(row, run.Y.at(p, k));
        append(row, run.v.at(p, k));
        append(row, run.z.at(p, k));
        append(row, run.u.at(p, k));
        traj.row(row);
      }
    }
  };
  const ClosedLoopEvaluation eval = evaluate_closed_loop(sol, batch, options);
  {
    Csv energy(dir / "energy.csv", {"path", "energy"});
    for (std::size_t p = 0; p < eval.energy.samples.size(); ++p) {
      energy.row({std::to_string(p), num(eval.energy.samples[p])});
    }
  }
  const AdjointSample adjoint = simulate_adjoint(sol.bsde, batch);
  const MartingaleCheck mart =
      adjoint_cross_check(sol.pbar, sol.pq, adjoint, batch, sol.spec.target, sol.spec.x0);
  const json out = {
      {"energy", {{"mean", eval.energy.mean}, {"standard_error", eval.energy.standard_error},
                  {"max_form_mismatch", eval.energy.max_form_mismatch}}},
      {"terminal", {{"mse", eval.terminal_mse},
                    {"mse_standard_error", eval.terminal_mse_standard_error},
                    {"max_abs", eval.terminal_max_abs}}},
      {"representation_gap", eval.representation_gap},
      {"martingale", {{"p0", to_json(mart.p0)}, {"mc_mean", to_json(mart.mc_mean)},
                      {"mc_standard_error", to_json(mart.mc_standard_error)},
                      {"K_mc", to_json(mart.K_mc)}, {"pass", mart.pass}}}};
  Csv summary(dir / "summary.csv", {"metric", "value"});
  summary.row({"energy_mean", num(eval.energy.mean)});
  summary.row({"energy_standard_error", num(eval.energy.standard_error)});
  summary.row({"terminal_mse", num(eval.terminal_mse)});
  summary.row({"terminal_max_abs", num(eval.terminal_max_abs)});
  summary.row({"representation_gap", num(eval.representation_gap)});
  return out;
}

ProblemSpec with_steps(ProblemSpec spec, const Options& opt) {
  return opt.steps ? spec.with_steps(*opt.steps) : spec;
}

int run_check(const ProblemSpec& spec, const Options& opt, const fs::path& dir, json& report) {
  const ValidationReport v = validate(spec);
  report["validation"] = findings_json(v);
  if (!v.pass()) return kInvalid;
  Decomposition dec;
  try {
    dec = decompose(spec);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kRankDeficientD) throw;
    report["controllable"] = false;
    report["reason"] = to_string(e.code());
    return kUncontrollable;
  }
  const ValidationReport schur = schur_check(dec);
  report["schur"] = findings_json(schur);
  if (!schur.pass()) return kInvalid;
  const RiccatiSolution pbar = solve_pbar(dec);
  write_riccati(dir, pbar);
  const ControllabilityVerdict verdict = controllability_test(pbar);
  const BrownianBatch batch = generate_paths(spec.grid, opt.paths, opt.seed);
  const GramianReport g = gramian_rank_mc(dec, batch);
  write_gramian(dir, g);
  const bool gram_full = g.rank == spec.n;
  report["riccati"] = {{"controllable", verdict.controllable},
                       {"margin", verdict.margin},
                       {"Pbar0", to_json(pbar.Pbar.front())},
                       {"psd", pbar.psd}};
  report["gramian"] = gramian_json(g);
  report["controllable"] = verdict.controllable;
  report["tests_agree"] = verdict.controllable == gram_full;
  return verdict.controllable ? kOk : kUncontrollable;
}

int run_solve(const ProblemSpec& spec, const fs::path& dir, json& report) {
  const MinimumEnergySolution sol = solve_minimum_energy(spec);
  write_riccati(dir, sol.pbar);
  write_bsde(dir, sol.pq);
  report["solution"] = solution_json(sol);
  const SolverSummary root = sol.root_controls(0.0);
  report["root_controls"] = {{"z0", to_json(root.z0)}, {"v0", to_json(root.v0)}};
  return kOk;
}

int run_simulate(const ProblemSpec& spec, const Options& opt, const fs::path& dir,
                 json& report) {
  const MinimumEnergySolution sol = solve_minimum_energy(spec);
  write_riccati(dir, sol.pbar);
  write_bsde(dir, sol.pq);
  report["solution"] = solution_json(sol);
  const BrownianBatch batch = generate_paths(spec.grid, opt.paths, opt.seed);
  report["simulation"] = simulate_json(sol, batch, dir, opt.export_paths);
  return kOk;
}

int run_oracle(const ProblemSpec& spec, const Options& opt, const fs::path& dir,
               json& report) {
  const TreeProblem tree = build_tree_problem(spec, opt.tree_depth);
  if (!opt.dump_qp.empty()) {
    std::ofstream out(opt.dump_qp);
    dump_qp(tree, out);
  }
  const TreeSolution tsol = solve_tree_qp(tree);
  const MinimumEnergySolution sol = solve_minimum_energy(spec);
  const BrownianBatch batch = generate_paths(spec.grid, opt.paths, opt.seed);
  const ClosedLoopEvaluation eval = evaluate_closed_loop(sol, batch);
  const OracleComparison cmp =
      compare_with_solver(tree, tsol, sol.root_controls(eval.energy.mean), opt.seed);
  const TreeSolution competitor = random_feasible_point(tree, opt.seed);
  const TreeIdentityReport ids = tree_identity_checks(tree, tsol, competitor);
  report["tree"] = {{"depth", tree.depth},
                    {"J", tsol.J},
                    {"kkt_residual", tsol.kkt_residual},
                    {"constraint_residual", tsol.constraint_residual},
                    {"z0", to_json(tsol.z(0, tree.n))},
                    {"v0", to_json(tsol.v(0, tree.n))}};
  report["comparison"] = {{"J_tree", cmp.J_tree},
                          {"J_solver", cmp.J_solver},
                          {"J_solver_standard_error", eval.energy.standard_error},
                          {"abs_gap", cmp.abs_gap},
                          {"rel_gap", cmp.rel_gap},
                          {"root_gap", cmp.root_gap},
                          {"sqrt_dt", cmp.sqrt_dt},
                          {"excess_identity_residual", cmp.excess_identity_residual}};
  report["identities"] = {{"lemma1", ids.lemma1},
                          {"lemma2_residual", ids.lemma2_residual},
                          {"orthogonality", ids.orthogonality},
                          {"excess_identity", ids.excess_identity}};
  Csv summary(dir / "summary.csv", {"metric", "value"});
  summary.row({"J_tree", num(cmp.J_tree)});
  summary.row({"J_solver", num(cmp.J_solver)});
  summary.row({"rel_gap", num(cmp.rel_gap)});
  summary.row({"root_gap", num(cmp.root_gap)});
  return kOk;
}

int run_lq(const std::string& text, const Options& opt, const fs::path& dir, json& report) {
  LqFixedProblem prob = load_lq_problem(text);
  prob.base = with_steps(prob.base, opt);
  const ValidationReport v = validate_lq(prob);
  report["validation"] = findings_json(v);
  if (!v.pass()) return kInvalid;
  const BrownianBatch batch = generate_paths(prob.base.grid, opt.paths, opt.seed);
  const LqFixedSolution sol = solve_lq_fixed(prob, batch);
  const int n = prob.base.n;
  const int m = prob.base.m;
  std::vector<std::string> header{"t"};
  for (auto& h : matrix_header("P", n, n)) header.push_back(h);
  for (auto& h : matrix_header("gain", m, n)) header.push_back(h);
  Csv csv(dir / "lq_riccati.csv", header);
  for (int k = 0; k < sol.lq_riccati.grid.nodes(); ++k) {
    std::vector<std::string> cells{num(sol.lq_riccati.grid.t(k))};
    append_matrix(cells, sol.lq_riccati.P[k]);
    append_matrix(cells, sol.lq_riccati.gain[k]);
    csv.row(cells);
  }
  report["lq"] = {{"P0", to_json(sol.lq_riccati.P.front())},
                  {"initial_cost", sol.initial_cost},
                  {"inner_cost", sol.inner_cost},
                  {"inner_cost_standard_error", sol.inner_cost_standard_error},
                  {"total_cost", sol.total_cost},
                  {"state_replay_gap", sol.state_replay_gap},
                  {"completion", {{"mean_difference", sol.completion.mean_difference},
                                  {"standard_error", sol.completion.standard_error}}},
                  {"terminal_mse", sol.evaluation.terminal_mse}};
  report["solution"] = solution_json(sol.inner);
  return kOk;
}

int dispatch(const std::string& command, const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir(opt.out_dir);
  json report = {{"command", command}, {"seed", opt.seed}, {"paths", opt.paths},
                 {"tree_depth", opt.tree_depth}};
  int code = kOk;
  try {
    fs::create_directories(dir);
    const std::string text = read_file(opt.config);
    report["config_digest"] = fnv1a(text);
    if (command == "lq") {
      code = run_lq(text, opt, dir, report);
    } else {
      const ProblemSpec spec = with_steps(load_problem(text), opt);
      report["steps"] = spec.grid.steps();
      if (command == "check") code = run_check(spec, opt, dir, report);
      else if (command == "solve") code = run_solve(spec, dir, report);
      else if (command == "simulate") code = run_simulate(spec, opt, dir, report);
      else code = run_oracle(spec, opt, dir, report);
    }
  } catch (const Error& e) {
    code = exit_code(e.code());
    report["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    std::cerr << "stochmin: " << e.what() << "\n";
  } catch (const std::exception& e) {
    code = kNumeric;
    report["error"] = {{"code", "INTERNAL"}, {"message", e.what()}};
    std::cerr << "stochmin: " << e.what() << "\n";
  }
  report["exit_code"] = code;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report["timing"] = {{"elapsed_seconds", elapsed}, {"threads", thread_count()}};
  std::error_code ec;
  std::ofstream out(dir / "report.json");
  if (out) out << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic minimum-energy control solver"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;
  const char* names[][2] = {
      {"check", "Controllability report from the Riccati and Gramian tests"},
      {"solve", "Riccati, BSDE and K exports"},
      {"simulate", "Closed-loop Monte-Carlo verification and energy"},
      {"oracle", "Binomial-tree QP value and comparison with the solver"},
      {"lq", "LQ regulator with fixed final state"}};
  for (const auto& entry : names) {
    CLI::App* sub = app.add_subcommand(entry[0], entry[1]);
    sub->add_option("--config", opt.config, "Problem document (JSON)")->required();
    sub->add_option("--paths", opt.paths, "Monte-Carlo paths")->check(CLI::PositiveNumber);
    sub->add_option("--steps", opt.steps, "Override the document's step count")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed, "Brownian seed");
    sub->add_option("--tree-depth", opt.tree_depth, "Binomial tree depth")
        ->check(CLI::Range(1, kMaxTreeDepth));
    sub->add_option("--out-dir", opt.out_dir, "Output directory");
    sub->add_option("--export-paths", opt.export_paths,
                    "Paths written to trajectories.csv");
    if (std::string(entry[0]) == "oracle") {
      sub->add_option("--dump-qp", opt.dump_qp, "Write the KKT system to this file");
    }
    sub->callback([&chosen, name = std::string(entry[0])] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::cout << app.help();
      return kOk;
    }
    std::cerr << e.what() << "\n" << app.help();
    return kUsage;
  }
  return dispatch(chosen, opt);
}
