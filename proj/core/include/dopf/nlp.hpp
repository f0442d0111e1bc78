#ifndef DOPF_NLP_HPP
#define DOPF_NLP_HPP

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace dopf {

/// Dense smooth NLP:  min f(x)  s.t.  c(x) = 0,  l <= x <= u.
/// Bounds may be +-inf; l_j == u_j pins the variable.
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;
  virtual int num_vars() const = 0;
  virtual int num_eq() const = 0;
  virtual Eigen::VectorXd lower() const = 0;
  virtual Eigen::VectorXd upper() const = 0;
  virtual double objective(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd constraints(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& x) const = 0;
  /// Hessian of f(x) + kappa' c(x).
  virtual Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& kappa) const = 0;
};

struct SolverTolerances {
  double kkt_tol = 1e-8;
  double feas_tol = 1e-8;
  double active_set_tol = 1e-6;
  int max_inner_iters = 200;
  double inexact_factor = 1e-2;  // zeta_1, approximate mode only
};

enum class SolveMode { exact, approximate };

enum class NlpStatus { solved, max_iters, infeasible, numerical_failure };

struct NlpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd kappa;       // equality multipliers, L = f + kappa' c + ...
  Eigen::VectorXd eta;         // signed bound multipliers, eta = z_up - z_lo
  std::vector<int> active_set;
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
  double objective = 0.0;
  int iterations = 0;
  NlpStatus status = NlpStatus::numerical_failure;
  bool ok() const { return status == NlpStatus::solved; }
};

/// j is active iff min(x_j - l_j, u_j - x_j) <= tol * max(1, u_j - l_j).
std::vector<int> detect_active_set(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper,
                                   double active_set_tol);

/// Eigenvalue flip: lambda < -eps0 -> |lambda|, |lambda| <= eps0 -> eps0.
/// Input must be symmetric; the result is SPD.
Eigen::MatrixXd regularize_hessian(const Eigen::MatrixXd& B, double eps0 = 1e-4);

/// Dense primal-dual interior-point method with a log barrier on the box
/// constraints and Newton steps on the perturbed KKT system. Fraction-to-
/// boundary 0.995, monotone barrier reduction mu <- mu/5, l1 merit line
/// search. Intended for the small per-region NLPs of this project.
class InteriorPointSolver {
 public:
  explicit InteriorPointSolver(SolverTolerances tol = {}) : tol_(tol) {}

  /// `proximal_center` drives the approximate-mode stopping rule
  /// (KKT residual <= inexact_factor * ||center - x||_inf, floored at kkt_tol).
  NlpResult solve(const NlpProblem& p, const Eigen::VectorXd& x0,
                  const Eigen::VectorXd* kappa0 = nullptr,
                  SolveMode mode = SolveMode::exact,
                  const Eigen::VectorXd* proximal_center = nullptr) const;

  void set_trace(std::ostream* trace) { trace_ = trace; }
  const SolverTolerances& tolerances() const { return tol_; }

 private:
  SolverTolerances tol_;
  std::ostream* trace_ = nullptr;
};

}  // namespace dopf

#endif  // DOPF_NLP_HPP
