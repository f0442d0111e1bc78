#include "dopf/admm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "dopf/opf_nlp.hpp"

namespace dopf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// slot of each local bus within the coupling vector, -1 for original buses
std::vector<int> coupling_slots(const Region& region) {
  std::vector<int> slot(region.num_buses(), -1);
  int next = 0;
  for (int i = 0; i < region.num_buses(); ++i)
    if (region.buses[i].is_aux) slot[i] = next++;
  return slot;
}

}  // namespace

std::vector<int> coupling_indices(const Region& region) {
  std::vector<int> idx;
  for (int i = 0; i < region.num_buses(); ++i) {
    if (!region.buses[i].is_aux) continue;
    for (int q = 0; q < 4; ++q) idx.push_back(4 * i + q);
  }
  return idx;
}

void admm_consensus_update(const PartitionedProblem& pp,
                           const std::vector<Eigen::VectorXd>& coupling_values,
                           std::vector<Eigen::VectorXd>& z_tilde) {
  const int R = static_cast<int>(pp.regions.size());
  if (static_cast<int>(coupling_values.size()) != R)
    throw std::invalid_argument("admm_consensus_update: one value block per region");
  std::vector<std::vector<int>> slots(R);
  for (int i = 0; i < R; ++i) slots[i] = coupling_slots(pp.regions[i]);
  z_tilde.resize(R);
  for (int i = 0; i < R; ++i) z_tilde[i].resizeLike(coupling_values[i]);

  for (const AuxiliaryPair& pr : pp.pairs) {
    const int ri = pr.region_first, rj = pr.region_second;
    const int li = pp.regions[ri].local_bus_index(pr.aux_first);
    const int lj = pp.regions[rj].local_bus_index(pr.aux_second);
    const int si = 4 * slots[ri][li], sj = 4 * slots[rj][lj];
    const Eigen::VectorXd& vk = coupling_values[ri];
    const Eigen::VectorXd& vl = coupling_values[rj];
    // theta, v: plain average on both sides
    for (int q = 0; q < 2; ++q) {
      const double avg = 0.5 * (vk[si + q] + vl[sj + q]);
      z_tilde[ri][si + q] = avg;
      z_tilde[rj][sj + q] = avg;
    }
    // p, q: antisymmetric split, the least-squares point with z_k + z_l = 0
    for (int q = 2; q < 4; ++q) {
      const double half = 0.5 * (vk[si + q] - vl[sj + q]);
      z_tilde[ri][si + q] = half;
      z_tilde[rj][sj + q] = -half;
    }
  }
}

Eigen::VectorXd admm_dual_update(const Eigen::VectorXd& lambda, const Eigen::VectorXd& Ex,
                                 const Eigen::VectorXd& z_tilde, double rho) {
  if (lambda.size() != Ex.size() || lambda.size() != z_tilde.size())
    throw std::invalid_argument("admm_dual_update: dimension mismatch");
  return lambda + rho * (Ex - z_tilde);
}

ConvergenceReport run_admm(const PartitionedProblem& pp, const AdmmConfig& cfg,
                           const AdmmOptions& opts) {
  if (cfg.rho <= 0.0) throw std::invalid_argument("admm rho must be positive");
  const int R = static_cast<int>(pp.regions.size());
  const int nx = pp.total_dim();

  ConvergenceReport report;
  report.algorithm = Algorithm::admm;
  report.comm.n_list.resize(R);
  for (int i = 0; i < R; ++i) report.comm.n_list[i] = pp.regions[i].core_dim();
  report.comm.nfw_bound = worst_case_forward(report.comm.n_list, Algorithm::admm);
  report.comm.nbw_bound = worst_case_backward(report.comm.n_list, Algorithm::admm);
  report.comm.binaries_bound = 0;

  std::vector<RegionNlp> nlps;
  nlps.reserve(R);
  std::vector<std::vector<int>> cplg(R);
  for (int i = 0; i < R; ++i) {
    nlps.emplace_back(pp.regions[i], pp.gamma);
    cplg[i] = coupling_indices(pp.regions[i]);
  }

  InteriorPointSolver solver(cfg.local_tol);
  double rho = cfg.rho;

  // Flat start; consensus copies start from the flat coupling values.
  Eigen::VectorXd x(nx);
  std::vector<Eigen::VectorXd> warm_x(R), kappa(R);
  std::vector<Eigen::VectorXd> lambda(R), z_tilde(R), Ex(R);
  for (int i = 0; i < R; ++i) {
    warm_x[i] = flat_start(pp.regions[i]);
    const int m = static_cast<int>(cplg[i].size());
    lambda[i] = Eigen::VectorXd::Zero(m);
    z_tilde[i].resize(m);
    for (int j = 0; j < m; ++j) z_tilde[i][j] = warm_x[i][cplg[i][j]];
  }

  for (int k = 0; k < cfg.max_iters; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.rho = rho;
    rec.mu = 0.0;

    std::vector<NlpResult> local(R);
    std::vector<double> t_local(R, 0.0);
    std::string local_error;
    auto solve_one = [&](int i) {
      const auto t0 = Clock::now();
      try {
        const Region& reg = pp.regions[i];
        Eigen::VectorXd lin = Eigen::VectorXd::Zero(reg.dim());
        Eigen::VectorXd prox_d = Eigen::VectorXd::Zero(reg.dim());
        Eigen::VectorXd center = Eigen::VectorXd::Zero(reg.dim());
        for (std::size_t j = 0; j < cplg[i].size(); ++j) {
          const int v = cplg[i][j];
          lin[v] = lambda[i][static_cast<int>(j)];
          prox_d[v] = rho;
          center[v] = z_tilde[i][static_cast<int>(j)];
        }
        nlps[i].set_augmentation(lin, prox_d, center);
        const Eigen::VectorXd* k0 = kappa[i].size() > 0 ? &kappa[i] : nullptr;
        local[i] = solver.solve(nlps[i], warm_x[i], k0, SolveMode::exact);
      } catch (const std::exception& e) {
        local[i].status = NlpStatus::numerical_failure;
        local_error = std::string("region ") + std::to_string(i) + ": " + e.what();
      }
      t_local[i] = seconds_since(t0);
    };
    if (cfg.parallel && R > 1) {
      std::vector<std::thread> pool;
      pool.reserve(R);
      for (int i = 0; i < R; ++i) pool.emplace_back(solve_one, i);
      for (auto& t : pool) t.join();
    } else {
      for (int i = 0; i < R; ++i) solve_one(i);
    }
    for (int i = 0; i < R; ++i) {
      if (local[i].status == NlpStatus::numerical_failure ||
          local[i].status == NlpStatus::infeasible) {
        report.status = RunStatus::failed;
        report.error = local_error.empty()
                           ? "local solve failed in region " + std::to_string(i)
                           : local_error;
      }
      x.segment(pp.region_offset(i), pp.regions[i].dim()) = local[i].x;
      warm_x[i] = local[i].x;
      kappa[i] = local[i].kappa;
    }
    if (report.status == RunStatus::failed) break;
    rec.t_local_max = *std::max_element(t_local.begin(), t_local.end());
    report.t_local_hat = std::max(report.t_local_hat, rec.t_local_max);

    rec.consensus_inf = consensus_violation(pp, x);
    double gap = 0.0;
    for (int i = 0; i < R; ++i) {
      Ex[i].resize(static_cast<int>(cplg[i].size()));
      for (std::size_t j = 0; j < cplg[i].size(); ++j)
        Ex[i][static_cast<int>(j)] = local[i].x[cplg[i][j]];
      if (Ex[i].size() > 0)
        gap = std::max(gap, (Ex[i] - z_tilde[i]).lpNorm<Eigen::Infinity>());
    }
    rec.primal_gap_inf = gap;
    if (opts.reference) {
      rec.dist_to_opt_inf = distance_to_reference(pp, x, *opts.reference);
      rec.subopt = suboptimality(generation_cost(pp.grid, pp.glue(x)),
                                 opts.reference->f_star);
    } else {
      rec.dist_to_opt_inf = std::nan("");
      rec.subopt = std::nan("");
    }

    // forward message: the local minimizers, n_i floats each
    rec.fw_floats = report.comm.nfw_bound;

    if (rec.consensus_inf <= cfg.eps) {
      rec.bw_floats = 0;
      report.comm.fw_total += rec.fw_floats;
      report.comm.nfw_actual_max = std::max(report.comm.nfw_actual_max, rec.fw_floats);
      report.records.push_back(rec);
      report.status = RunStatus::converged;
      report.iterations = k + 1;
      break;
    }

    const auto tc0 = Clock::now();
    std::vector<Eigen::VectorXd> z_old = z_tilde;
    admm_consensus_update(pp, Ex, z_tilde);
    double dual_res = 0.0;
    long bw = 0;
    for (int i = 0; i < R; ++i) {
      lambda[i] = admm_dual_update(lambda[i], Ex[i], z_tilde[i], rho);
      if (z_tilde[i].size() > 0)
        dual_res = std::max(dual_res,
                            rho * (z_tilde[i] - z_old[i]).lpNorm<Eigen::Infinity>());
      bw += z_tilde[i].size();  // broadcast copies; duals are updated locally
    }
    rec.dual_res_inf = dual_res;
    rec.t_coord = seconds_since(tc0);
    report.t_coord_hat = std::max(report.t_coord_hat, rec.t_coord);
    rec.bw_floats = bw;
    report.comm.fw_total += rec.fw_floats;
    report.comm.bw_total += bw;
    report.comm.nfw_actual_max = std::max(report.comm.nfw_actual_max, rec.fw_floats);
    report.comm.nbw_actual_max = std::max(report.comm.nbw_actual_max, bw);

    if (cfg.adapt_rho) {
      // residual balancing with dual rescaling
      if (rec.consensus_inf > 10.0 * dual_res) {
        rho *= 2.0;
        for (auto& l : lambda) l *= 0.5;
      } else if (dual_res > 10.0 * rec.consensus_inf) {
        rho *= 0.5;
        for (auto& l : lambda) l *= 2.0;
      }
    }

    report.records.push_back(rec);
    report.iterations = k + 1;
  }

  if (report.status != RunStatus::converged && report.status != RunStatus::failed)
    report.status = RunStatus::max_iters;
  report.x_stacked = x;
  report.x_glued = pp.glue(x);
  report.objective = generation_cost(pp.grid, report.x_glued);
  report.final_consensus_inf = consensus_violation(pp, x);
  return report;
}

}  // namespace dopf
