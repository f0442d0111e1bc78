#ifndef DOPF_REPORT_HPP
#define DOPF_REPORT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dopf/comm.hpp"

namespace dopf {

struct IterationRecord {
  int k = 0;
  double consensus_inf = 0.0;    // ||A x||_inf
  double primal_gap_inf = 0.0;   // ||x - z||_inf (0 for ADMM)
  double dist_to_opt_inf = 0.0;  // ||x - x*||_inf on the glued layout, NaN without reference
  double dual_res_inf = 0.0;
  double subopt = 0.0;           // |f - f*| / max(1, |f*|), NaN without reference
  double rho = 0.0;
  double mu = 0.0;
  double alpha = 1.0;            // accepted step fraction
  double qp_rel_residual = 0.0;  // coordination QP KKT relative residual
  long fw_floats = 0;
  long bw_floats = 0;
  long slack_extra = 0;
  double t_local_max = 0.0;      // wall seconds, slowest region
  double t_coord = 0.0;          // coordination step wall seconds
};

enum class RunStatus { converged, max_iters, failed };

std::string to_string(RunStatus s);

struct ConvergenceReport {
  Algorithm algorithm = Algorithm::aladin;
  std::string case_name;
  RunStatus status = RunStatus::max_iters;
  std::vector<IterationRecord> records;
  int iterations = 0;
  Eigen::VectorXd x_stacked;  // final distributed iterate
  Eigen::VectorXd x_glued;    // mapped back to the original bus layout
  Eigen::VectorXd z_final;    // final consensus reference (ALADIN)
  Eigen::VectorXd lambda_final;  // final consensus multiplier
  double objective = 0.0;     // generation cost of the glued point
  double final_consensus_inf = 0.0;
  double t_local_hat = 0.0;   // max over iterations of the slowest region's solve
  double t_coord_hat = 0.0;
  CommReport comm;
  std::string error;
};

/// Header: k,consensus_inf,dist_to_opt_inf,dual_res_inf,subopt,rho,mu,fw_floats,bw_floats
void write_iterations_csv(std::ostream& out, const ConvergenceReport& report);

/// Versioned summary document; throws if a required field is missing.
nlohmann::json summary_json(const ConvergenceReport& report);

nlohmann::json solution_json(const ConvergenceReport& report,
                             const std::vector<std::string>& bus_labels,
                             const std::vector<double>& theta,
                             const std::vector<double>& v,
                             const std::vector<double>& p,
                             const std::vector<double>& q);

}  // namespace dopf

#endif  // DOPF_REPORT_HPP
