#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dopf/admm.hpp"
#include "dopf/aladin.hpp"
#include "dopf/cases.hpp"
#include "dopf/diagnostics.hpp"
#include "dopf/grid.hpp"
#include "dopf/partition.hpp"
#include "dopf/report.hpp"

namespace fs = std::filesystem;
using namespace dopf;

namespace {

int log_level() {
  const char* v = std::getenv("OPF_LOG");
  return v ? std::atoi(v) : 0;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct RunConfig {
  std::string case_name = "5";
  std::string partition = "builtin";
  std::string algorithm = "aladin";
  std::string preset;
  double eps = 1e-4;
  int max_iters = 100;
  double rho0 = 1e2;
  double mu0 = 1e3;
  double gamma = 0.0;
  double rho_admm = 1e4;
  std::string hessian = "exact";
  std::string local_solve = "exact";
  std::string out_dir = ".";
  bool no_parallel = false;
  bool no_reference = false;
};

void add_common_flags(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--case", rc.case_name, "builtin case name or path to a case file");
  cmd->add_option("--partition", rc.partition, "'builtin' or path to a partition JSON");
  cmd->add_option("--preset", rc.preset, "'paper': published per-case parameters");
  cmd->add_option("--eps", rc.eps, "termination tolerance");
  cmd->add_option("--max-iters", rc.max_iters, "iteration budget");
  cmd->add_option("--rho0", rc.rho0, "initial ALADIN penalty / ADMM penalty");
  cmd->add_option("--mu0", rc.mu0, "initial QP penalty");
  cmd->add_option("--gamma", rc.gamma, "reactive-power regularization weight");
  cmd->add_option("--rho-admm", rc.rho_admm, "ADMM penalty parameter");
  cmd->add_option("--hessian", rc.hessian, "exact | bfgs")
      ->check(CLI::IsMember({"exact", "bfgs"}));
  cmd->add_option("--local-solve", rc.local_solve, "exact | approx")
      ->check(CLI::IsMember({"exact", "approx"}));
  cmd->add_option("--out", rc.out_dir, "output directory");
  cmd->add_flag("--no-parallel", rc.no_parallel, "solve regions sequentially");
  cmd->add_flag("--no-reference", rc.no_reference,
                "skip the centralized reference solve");
}

GridCase load_case(const RunConfig& rc) {
  if (is_builtin_case(rc.case_name)) return load_builtin_case(rc.case_name);
  const std::string text = slurp(rc.case_name);
  if (rc.case_name.size() > 5 && rc.case_name.substr(rc.case_name.size() - 5) == ".json")
    return parse_json_case(text);
  return parse_matpower_case(text);
}

PartitionSpec load_partition(const RunConfig& rc) {
  if (rc.partition == "builtin") {
    if (!is_builtin_case(rc.case_name))
      throw std::runtime_error("builtin partition requires a builtin case");
    return builtin_partition(rc.case_name);
  }
  return parse_partition_json(slurp(rc.partition));
}

struct Prepared {
  GridCase grid;
  PartitionedProblem pp;
  AladinConfig acfg;
  AdmmConfig mcfg;
  std::optional<CentralReference> reference;
};

Prepared prepare(const RunConfig& rc, bool want_reference) {
  Prepared p;
  p.grid = load_case(rc);
  const auto issues = validate_case(p.grid);
  if (!issues.empty()) {
    std::string msg = "invalid case:";
    for (const auto& s : issues) msg += "\n  " + s;
    throw std::runtime_error(msg);
  }

  double gamma = rc.gamma;
  if (rc.preset == "paper") {
    if (!is_builtin_case(rc.case_name))
      throw std::runtime_error("--preset paper requires a builtin case");
    p.acfg = paper_preset(rc.case_name);
    gamma = preset_gamma(rc.case_name);
  } else if (!rc.preset.empty()) {
    throw std::runtime_error("unknown preset '" + rc.preset + "'");
  } else {
    p.acfg.rho0 = rc.rho0;
    p.acfg.mu0 = rc.mu0;
  }
  p.acfg.eps = rc.eps;
  p.acfg.max_iters = rc.max_iters;
  p.acfg.hessian = rc.hessian == "bfgs" ? HessianMode::bfgs : HessianMode::exact;
  p.acfg.local_mode =
      rc.local_solve == "approx" ? SolveMode::approximate : SolveMode::exact;
  p.acfg.parallel = !rc.no_parallel;

  p.mcfg.rho = rc.rho_admm;
  p.mcfg.eps = rc.eps;
  p.mcfg.max_iters = std::max(rc.max_iters, 500);
  p.mcfg.parallel = !rc.no_parallel;

  p.pp = decompose(p.grid, load_partition(rc), gamma);

  if (want_reference && !rc.no_reference && p.grid.num_buses() <= 60) {
    if (log_level() > 0) std::cerr << "computing centralized reference...\n";
    p.reference = compute_reference(p.grid, gamma);
    if (!p.reference && log_level() > 0)
      std::cerr << "warning: centralized reference solve failed\n";
  }
  return p;
}

ConvergenceReport run_algorithm(const Prepared& p, const std::string& algorithm,
                                const std::string& case_name) {
  ConvergenceReport rep;
  if (algorithm == "admm") {
    AdmmOptions o;
    o.reference = p.reference;
    rep = run_admm(p.pp, p.mcfg, o);
  } else {
    AladinConfig cfg = p.acfg;
    if (algorithm == "aladin-bfgs") cfg.hessian = HessianMode::bfgs;
    AladinOptions o;
    o.reference = p.reference;
    rep = run_aladin(p.pp, cfg, o);
  }
  rep.case_name = case_name;
  return rep;
}

void write_artifacts(const ConvergenceReport& rep, const GridCase& grid,
                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream csv(fs::path(out_dir) / "iterations.csv");
    write_iterations_csv(csv, rep);
  }
  {
    std::ofstream js(fs::path(out_dir) / "summary.json");
    js << summary_json(rep).dump(2) << "\n";
  }
  if (rep.x_glued.size() == 4 * grid.num_buses()) {
    std::vector<std::string> labels;
    std::vector<double> theta, v, pp_, qq;
    for (int b = 0; b < grid.num_buses(); ++b) {
      labels.push_back(std::to_string(grid.buses[b].id));
      theta.push_back(rep.x_glued[4 * b + 0]);
      v.push_back(rep.x_glued[4 * b + 1]);
      pp_.push_back(rep.x_glued[4 * b + 2]);
      qq.push_back(rep.x_glued[4 * b + 3]);
    }
    std::ofstream js(fs::path(out_dir) / "solution.json");
    js << solution_json(rep, labels, theta, v, pp_, qq).dump(2) << "\n";
  }
}

int exit_code(const ConvergenceReport& rep) {
  switch (rep.status) {
    case RunStatus::converged: return 0;
    case RunStatus::max_iters: return 2;
    case RunStatus::failed: return 1;
  }
  return 1;
}

int cmd_solve(const RunConfig& rc) {
  if (rc.algorithm == "central") {
    const GridCase grid = load_case(rc);
    double gamma = rc.gamma;
    if (rc.preset == "paper") gamma = preset_gamma(rc.case_name);
    const CentralSolution sol = solve_centralized(grid, gamma);
    ConvergenceReport rep;
    rep.algorithm = Algorithm::central;
    rep.case_name = rc.case_name;
    rep.status = sol.status == NlpStatus::solved ? RunStatus::converged
                                                 : RunStatus::failed;
    rep.iterations = sol.iterations;
    rep.x_glued = sol.x;
    rep.objective = generation_cost(grid, sol.x);
    write_artifacts(rep, grid, rc.out_dir);
    std::cout << "central objective " << rep.objective << " ("
              << to_string(rep.status) << ")\n";
    return exit_code(rep);
  }
  const Prepared p = prepare(rc, true);
  const ConvergenceReport rep = run_algorithm(p, rc.algorithm, rc.case_name);
  write_artifacts(rep, p.grid, rc.out_dir);
  std::cout << rc.algorithm << " on case " << rc.case_name << ": "
            << to_string(rep.status) << " after " << rep.iterations
            << " iterations, |Ax|_inf = " << rep.final_consensus_inf
            << ", objective " << rep.objective << "\n";
  if (!rep.error.empty()) std::cerr << "error: " << rep.error << "\n";
  return exit_code(rep);
}

int cmd_compare(const RunConfig& rc, const std::string& algo_a,
                const std::string& algo_b) {
  const Prepared p = prepare(rc, true);
  const ConvergenceReport a = run_algorithm(p, algo_a, rc.case_name);
  const ConvergenceReport b = run_algorithm(p, algo_b, rc.case_name);

  fs::create_directories(rc.out_dir);
  std::ofstream csv(fs::path(rc.out_dir) / "compare.csv");
  csv << "algorithm,iterations,status,consensus_inf,objective,subopt\n";
  std::ostringstream row;
  for (const auto* r : {&a, &b}) {
    double sub = std::nan("");
    if (p.reference) sub = suboptimality(r->objective, p.reference->f_star);
    row.str("");
    row << to_string(r->algorithm) << ',' << r->iterations << ','
        << to_string(r->status) << ',' << r->final_consensus_inf << ','
        << r->objective << ',' << sub << "\n";
    csv << row.str();
    std::cout << row.str();
  }
  const double ratio =
      a.iterations > 0 ? static_cast<double>(b.iterations) / a.iterations : 0.0;
  csv << "ratio," << ratio << ",,,,\n";
  std::cout << "iteration ratio (" << algo_b << "/" << algo_a << "): " << ratio
            << "\n";
  if (a.status == RunStatus::failed || b.status == RunStatus::failed) return 1;
  return 0;
}

int cmd_sweep(const RunConfig& rc, const std::string& param,
              const std::vector<double>& values) {
  fs::create_directories(rc.out_dir);
  std::ofstream csv(fs::path(rc.out_dir) / "sweep.csv");
  csv << "param,value,iterations,status,consensus_inf\n";
  double best_value = values.front();
  int best_iters = std::numeric_limits<int>::max();
  for (double v : values) {
    RunConfig r = rc;
    if (param == "rho0")
      r.rho0 = v;
    else if (param == "mu0")
      r.mu0 = v;
    else if (param == "rho-admm")
      r.rho_admm = v;
    else
      throw std::runtime_error("unknown sweep parameter '" + param + "'");
    std::string status;
    int iters = 0;
    double cons = std::nan("");
    try {
      const Prepared p = prepare(r, false);
      const ConvergenceReport rep = run_algorithm(p, r.algorithm, r.case_name);
      status = to_string(rep.status);
      iters = rep.iterations;
      cons = rep.final_consensus_inf;
      if (rep.status == RunStatus::converged && iters < best_iters) {
        best_iters = iters;
        best_value = v;
      }
    } catch (const std::exception& e) {
      status = "failed";
      if (log_level() > 0) std::cerr << param << "=" << v << ": " << e.what() << "\n";
    }
    csv << param << ',' << v << ',' << iters << ',' << status << ',' << cons << "\n";
    std::cout << param << " = " << v << ": " << status << " after " << iters
              << " iterations\n";
  }
  if (best_iters < std::numeric_limits<int>::max()) {
    csv << "best," << best_value << ',' << best_iters << ",converged,\n";
    std::cout << "best " << param << " = " << best_value << " (" << best_iters
              << " iterations)\n";
    return 0;
  }
  std::cout << "no configuration converged\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed AC optimal power flow (ALADIN / ADMM)"};
  app.require_subcommand(1);

  RunConfig rc;
  auto* solve = app.add_subcommand("solve", "run one algorithm on one case");
  add_common_flags(solve, rc);
  solve->add_option("--algorithm", rc.algorithm, "aladin | aladin-bfgs | admm | central")
      ->check(CLI::IsMember({"aladin", "aladin-bfgs", "admm", "central"}));

  RunConfig rcc;
  std::string algo_a = "aladin", algo_b = "admm";
  auto* compare = app.add_subcommand("compare", "run two algorithms side by side");
  add_common_flags(compare, rcc);
  compare->add_option("--algo-a", algo_a, "first algorithm");
  compare->add_option("--algo-b", algo_b, "second algorithm");

  RunConfig rcs;
  std::string param = "rho0";
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "sweep one parameter");
  add_common_flags(sweep, rcs);
  sweep->add_option("--algorithm", rcs.algorithm, "aladin | aladin-bfgs | admm")
      ->check(CLI::IsMember({"aladin", "aladin-bfgs", "admm"}));
  sweep->add_option("--param", param, "rho0 | mu0 | rho-admm");
  sweep->add_option("--values", values, "grid values")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (solve->parsed()) return cmd_solve(rc);
    if (compare->parsed()) return cmd_compare(rcc, algo_a, algo_b);
    if (sweep->parsed()) return cmd_sweep(rcs, param, values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
