#ifndef DOPF_OPF_NLP_HPP
#define DOPF_OPF_NLP_HPP

#include <Eigen/Dense>

#include "dopf/nlp.hpp"
#include "dopf/partition.hpp"

namespace dopf {

/// The per-region NLP of the decomposed OPF. Variables are bus-major
/// (theta, v, p, q) followed by one slack per limited line. Equality rows:
/// two power-flow residuals per bus, the reference anchors (theta_r = 0,
/// v_r = 1) when the region owns the reference bus, and s = p_kl^2 + q_kl^2
/// per limited line. All derivatives are analytic.
///
/// An optional augmentation
///   a'x + 1/2 (x - c)' diag(d) (x - c)
/// carries the ALADIN proximal term (a = A_i' lambda, d = rho * Sigma_i,
/// c = z_i) or the ADMM coupling penalty.
class RegionNlp : public NlpProblem {
 public:
  RegionNlp(const Region& region, double gamma);

  int num_vars() const override { return region_->dim(); }
  int num_eq() const override { return region_->num_eq(); }
  Eigen::VectorXd lower() const override { return region_->lower(); }
  Eigen::VectorXd upper() const override { return region_->upper(); }

  double objective(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd constraints(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& kappa) const override;

  /// f_i and its derivatives without the augmentation; these are what the
  /// regions communicate.
  double core_objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd core_gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd core_lagrangian_hessian(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& kappa) const;

  void set_augmentation(const Eigen::VectorXd& linear, const Eigen::VectorXd& prox_diag,
                        const Eigen::VectorXd& prox_center);
  void clear_augmentation();

  const Region& region() const { return *region_; }

 private:
  const Region* region_;
  double gamma_;
  bool augmented_ = false;
  Eigen::VectorXd lin_, prox_d_, prox_c_;
};

/// Diagonal scaling Sigma_i: 100 for theta and v, 1 for p, q and slacks.
Eigen::VectorXd make_sigma(const Region& region);

/// Flat start: v = 1, everything else 0.
Eigen::VectorXd flat_start(const Region& region);

struct CentralSolution {
  Eigen::VectorXd x;  // 4 values per bus of the original case
  double objective = 0.0;
  Eigen::VectorXd kappa;
  Eigen::VectorXd eta;
  NlpStatus status = NlpStatus::numerical_failure;
  int iterations = 0;
};

/// Solves the undecomposed problem with the embedded solver; the reference
/// point for the convergence diagnostics.
CentralSolution solve_centralized(const GridCase& gc, double gamma,
                                  const SolverTolerances& tol = {});

}  // namespace dopf

#endif  // DOPF_OPF_NLP_HPP
