#include "dopf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dopf {

std::optional<CentralReference> compute_reference(const GridCase& gc, double gamma,
                                                  const SolverTolerances& tol) {
  CentralSolution sol = solve_centralized(gc, gamma, tol);
  if (sol.status != NlpStatus::solved) return std::nullopt;
  CentralReference ref;
  ref.x_star = sol.x;
  ref.f_star = generation_cost(gc, sol.x);
  return ref;
}

double consensus_violation(const PartitionedProblem& pp, const Eigen::VectorXd& x_stacked) {
  if (pp.pairs.empty()) return 0.0;
  return pp.consensus_residual(x_stacked).lpNorm<Eigen::Infinity>();
}

double distance_to_reference(const PartitionedProblem& pp, const Eigen::VectorXd& x_stacked,
                             const CentralReference& ref) {
  const Eigen::VectorXd glued = pp.glue(x_stacked);
  if (glued.size() != ref.x_star.size())
    throw std::invalid_argument("reference layout does not match the case");
  return (glued - ref.x_star).lpNorm<Eigen::Infinity>();
}

double dual_residual(const PartitionedProblem& pp, const Eigen::VectorXd& x_stacked,
                     const Eigen::VectorXd& lambda,
                     const std::vector<Eigen::VectorXd>& kappa,
                     const std::vector<Eigen::VectorXd>& eta) {
  if (kappa.size() != pp.regions.size() || eta.size() != pp.regions.size())
    throw std::invalid_argument("dual_residual: one multiplier set per region required");
  double worst = 0.0;
  for (std::size_t i = 0; i < pp.regions.size(); ++i) {
    const Region& reg = pp.regions[i];
    const Eigen::VectorXd xi =
        x_stacked.segment(pp.region_offset(static_cast<int>(i)), reg.dim());
    RegionNlp nlp(reg, pp.gamma);
    Eigen::VectorXd r = nlp.core_gradient(xi);
    r += pp.consensus[i].transpose() * lambda;
    r += nlp.constraint_jacobian(xi).transpose() * kappa[i];
    r += eta[i];
    worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double suboptimality(double f, double f_star) {
  return std::abs(f - f_star) / std::max(1.0, std::abs(f_star));
}

double generation_cost(const GridCase& gc, const Eigen::VectorXd& x_glued) {
  if (x_glued.size() != 4 * gc.num_buses())
    throw std::invalid_argument("generation_cost: expected 4 values per bus");
  double f = 0.0;
  for (int b = 0; b < gc.num_buses(); ++b) {
    const Bus& bus = gc.buses[b];
    std::vector<const Generator*> gens;
    for (const Generator& g : gc.generators)
      if (g.bus_id == bus.id) gens.push_back(&g);
    if (gens.empty()) continue;
    const LocalBus lb = aggregate_generators(bus, gens);
    const double p = x_glued[4 * b + 2];
    f += lb.c1 * p * p + lb.c2 * p + lb.c3;
  }
  return f;
}

std::optional<double> estimate_convergence_rate(const std::vector<double>& errors) {
  // Keep the strictly positive, strictly decreasing tail. Once the error
  // falls below sqrt(machine epsilon) relative to the start of the current
  // decay run, the iterates wobble at solver precision and carry no rate
  // information; truncate the series there.
  const double sat = std::sqrt(std::numeric_limits<double>::epsilon());
  std::vector<double> tail;
  for (double e : errors) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      tail.clear();
      continue;
    }
    if (!tail.empty() && e < sat * tail.front()) break;
    if (!tail.empty() && e >= tail.back()) tail.clear();
    tail.push_back(e);
  }
  if (tail.size() < 4) return std::nullopt;
  // Least squares fit of log10 e_{k+1} = a + q * log10 e_k.
  const std::size_t m = tail.size() - 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double x = std::log10(tail[k]);
    const double y = std::log10(tail[k + 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return (m * sxy - sx * sy) / denom;
}

}  // namespace dopf
