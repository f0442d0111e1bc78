#ifndef DOPF_DIAGNOSTICS_HPP
#define DOPF_DIAGNOSTICS_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dopf/opf_nlp.hpp"
#include "dopf/partition.hpp"

namespace dopf {

/// Reference solution for distance-to-optimum diagnostics: the centralized
/// minimizer mapped to the glued layout (4 values per original bus).
struct CentralReference {
  Eigen::VectorXd x_star;
  double f_star = 0.0;  // generation cost without the gamma term
};

std::optional<CentralReference> compute_reference(const GridCase& gc, double gamma,
                                                  const SolverTolerances& tol = {});

/// ||sum_i A_i x_i||_inf.
double consensus_violation(const PartitionedProblem& pp, const Eigen::VectorXd& x_stacked);

/// ||x - x*||_inf measured on the glued layout.
double distance_to_reference(const PartitionedProblem& pp, const Eigen::VectorXd& x_stacked,
                             const CentralReference& ref);

/// Stationarity residual of the stacked KKT system at the current multipliers:
/// r_i = grad f_i + A_i' lambda + C_i' kappa_i + eta_i, infinity norm over all
/// regions. kappa_i and eta_i come from the latest local solves.
double dual_residual(const PartitionedProblem& pp, const Eigen::VectorXd& x_stacked,
                     const Eigen::VectorXd& lambda,
                     const std::vector<Eigen::VectorXd>& kappa,
                     const std::vector<Eigen::VectorXd>& eta);

/// Relative objective gap |f - f*| / max(1, |f*|). The objective is the
/// generation cost of the glued point, gamma term excluded on both sides.
double suboptimality(double f, double f_star);

/// Generation cost of a glued point (sum of the aggregated quadratic costs,
/// no gamma term).
double generation_cost(const GridCase& gc, const Eigen::VectorXd& x_glued);

/// Least-squares slope of log10(e_{k+1}) against log10(e_k) over the tail of
/// an error sequence; > 1 indicates superlinear local convergence. Requires
/// at least 4 strictly positive, decreasing tail entries; returns nullopt
/// otherwise.
std::optional<double> estimate_convergence_rate(const std::vector<double>& errors);

}  // namespace dopf

#endif  // DOPF_DIAGNOSTICS_HPP
