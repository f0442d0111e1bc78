#ifndef DOPF_ADMM_HPP
#define DOPF_ADMM_HPP

#include <vector>

#include <Eigen/Dense>

#include "dopf/diagnostics.hpp"
#include "dopf/nlp.hpp"
#include "dopf/partition.hpp"
#include "dopf/report.hpp"

namespace dopf {

struct AdmmConfig {
  double rho = 1e4;
  double eps = 1e-4;       // termination on ||A x||_inf
  int max_iters = 500;
  bool adapt_rho = false;  // residual-balancing adaptation, off by default
  SolverTolerances local_tol;
  bool parallel = true;
};

/// Coupling coordinates of a region: the 4 variables of every auxiliary bus,
/// in local order.
std::vector<int> coupling_indices(const Region& region);

/// Consensus copies per pair (k, l): theta and v averaged on both sides,
/// z_p = (p_k - p_l)/2 assigned (+ at k, - at l), z_q likewise. Input and
/// output are stacked over regions, one value per coupling coordinate,
/// indexed like coupling_indices.
void admm_consensus_update(const PartitionedProblem& pp,
                           const std::vector<Eigen::VectorXd>& coupling_values,
                           std::vector<Eigen::VectorXd>& z_tilde);

/// lambda+ = lambda + rho (E x - z).
Eigen::VectorXd admm_dual_update(const Eigen::VectorXd& lambda, const Eigen::VectorXd& Ex,
                                 const Eigen::VectorXd& z_tilde, double rho);

struct AdmmOptions {
  std::optional<CentralReference> reference;
};

ConvergenceReport run_admm(const PartitionedProblem& pp, const AdmmConfig& cfg,
                           const AdmmOptions& opts = {});

}  // namespace dopf

#endif  // DOPF_ADMM_HPP
