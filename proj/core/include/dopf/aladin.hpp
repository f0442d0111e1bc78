#ifndef DOPF_ALADIN_HPP
#define DOPF_ALADIN_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dopf/diagnostics.hpp"
#include "dopf/nlp.hpp"
#include "dopf/opf_nlp.hpp"
#include "dopf/partition.hpp"
#include "dopf/report.hpp"

namespace dopf {

enum class HessianMode { exact, bfgs };
enum class StepRule { full_step, guarded };

struct AladinConfig {
  double rho0 = 1e2;
  double rho_max = 1e6;
  double r_rho = 1.5;
  double mu0 = 1e3;
  double mu_max = 2e6;
  double r_mu = 2.0;
  double eps = 1e-4;           // termination tolerance, both tests
  int max_iters = 100;
  HessianMode hessian = HessianMode::exact;
  SolveMode local_mode = SolveMode::exact;
  StepRule step_rule = StepRule::full_step;
  SolverTolerances local_tol;
  bool parallel = true;
  double hessian_eps0 = 1e-4;       // eigenvalue-flip threshold
  double rho_floor_factor = 1e-2;   // lower cap rho0 * factor when r_rho < 1
  double qp_residual_tol = 1e-8;    // relative residual guard on the QP solve
  int damp_window = 2;              // guarded rule: damped iterations per trigger
};

/// Region -> coordinator message: gradient, Lagrangian Hessian (raw and the
/// SPD repaired copy used by the QP), and the equality Jacobian at x_i.
struct Sensitivities {
  Eigen::VectorXd g;
  Eigen::MatrixXd B_raw;
  Eigen::MatrixXd B;      // regularize_hessian(B_raw)
  Eigen::MatrixXd C;
};

struct CoordinationResult {
  std::vector<Eigen::VectorXd> dx;  // per region
  Eigen::VectorXd s;
  Eigen::VectorXd lambda_qp;
  double rel_residual = 0.0;
  double wall_seconds = 0.0;
};

/// Both tests of the stopping rule: ||sum A_i x_i||_inf <= eps and
/// ||x - z||_inf <= eps.
bool check_termination(const Eigen::VectorXd& consensus_residual,
                       const Eigen::VectorXd& x_stacked, const Eigen::VectorXd& z_stacked,
                       double eps);

/// Equality-constrained coordination QP with slack-penalized consensus:
///   min 1/2 dx'B dx + g'dx + lambda's + mu/2 ||s||^2
///   s.t. sum A_i (x_i + dx_i) = s,  C_i dx_i = 0,  dx_j = 0 on active bounds,
/// solved as one dense KKT system. Throws when the system is singular,
/// naming the region whose [C; E] block lost row rank if one is found.
CoordinationResult solve_coordination_qp(const PartitionedProblem& pp,
                                         const std::vector<Sensitivities>& sens,
                                         const std::vector<std::vector<int>>& active_sets,
                                         const Eigen::VectorXd& x_stacked,
                                         const Eigen::VectorXd& lambda, double mu,
                                         double qp_residual_tol = 1e-8);

/// Damped BFGS (Powell): skips when ||s|| <= 1e-12 or curvature degenerates.
Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& B, const Eigen::VectorXd& s,
                            const Eigen::VectorXd& y);

struct AladinOptions {
  std::optional<CentralReference> reference;  // enables dist/subopt columns
  std::optional<Eigen::VectorXd> z0;          // initial reference (stacked); default flat start
  std::optional<Eigen::VectorXd> lambda0;     // initial consensus multiplier; default 0
};

ConvergenceReport run_aladin(const PartitionedProblem& pp, const AladinConfig& cfg,
                             const AladinOptions& opts = {});

}  // namespace dopf

#endif  // DOPF_ALADIN_HPP
