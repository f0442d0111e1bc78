#include "dopf/aladin.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace dopf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

long nnz_upper(const Eigen::MatrixXd& B, int dim) {
  long c = 0;
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i <= j; ++i)
      if (B(i, j) != 0.0) ++c;
  return c;
}

long nnz_block(const Eigen::MatrixXd& M, int rows, int cols) {
  long c = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (M(i, j) != 0.0) ++c;
  return c;
}

long nnz_vec(const Eigen::VectorXd& v, int dim) {
  long c = 0;
  for (int j = 0; j < dim; ++j)
    if (v[j] != 0.0) ++c;
  return c;
}

}  // namespace

bool check_termination(const Eigen::VectorXd& consensus_residual,
                       const Eigen::VectorXd& x_stacked, const Eigen::VectorXd& z_stacked,
                       double eps) {
  const double c = consensus_residual.size() > 0
                       ? consensus_residual.lpNorm<Eigen::Infinity>()
                       : 0.0;
  const double gap = (x_stacked - z_stacked).lpNorm<Eigen::Infinity>();
  return c <= eps && gap <= eps;
}

Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& B, const Eigen::VectorXd& s,
                            const Eigen::VectorXd& y) {
  if (s.lpNorm<Eigen::Infinity>() <= 1e-12) return B;
  const Eigen::VectorXd Bs = B * s;
  const double sBs = s.dot(Bs);
  if (sBs <= 1e-14) return B;
  const double sy = s.dot(y);
  double theta = 1.0;
  if (sy < 0.2 * sBs) theta = 0.8 * sBs / (sBs - sy);
  const Eigen::VectorXd r = theta * y + (1.0 - theta) * Bs;
  const double sr = s.dot(r);
  if (sr <= 1e-14) return B;
  return B - (Bs * Bs.transpose()) / sBs + (r * r.transpose()) / sr;
}

CoordinationResult solve_coordination_qp(const PartitionedProblem& pp,
                                         const std::vector<Sensitivities>& sens,
                                         const std::vector<std::vector<int>>& active_sets,
                                         const Eigen::VectorXd& x_stacked,
                                         const Eigen::VectorXd& lambda, double mu,
                                         double qp_residual_tol) {
  const auto t0 = Clock::now();
  const int R = static_cast<int>(pp.regions.size());
  const int nx = pp.total_dim();
  const int nc = pp.num_consensus_rows();
  // Keep only active-bound rows that are independent of [C; earlier rows];
  // loosely solved local problems can flag redundant bounds, and a duplicate
  // row makes the KKT system singular.
  std::vector<std::vector<int>> active(R);
  for (int i = 0; i < R; ++i) {
    const int ni = pp.regions[i].dim();
    const int hi = static_cast<int>(sens[i].C.rows());
    Eigen::MatrixXd CE(hi + static_cast<int>(active_sets[i].size()), ni);
    CE.topRows(hi) = sens[i].C;
    int rows = hi;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(CE.topRows(rows).transpose());
    int rank = static_cast<int>(qr.rank());
    for (int j : active_sets[i]) {
      CE.row(rows).setZero();
      CE(rows, j) = 1.0;
      qr.compute(CE.topRows(rows + 1).transpose());
      if (static_cast<int>(qr.rank()) == rank + 1) {
        active[i].push_back(j);
        ++rows;
        ++rank;
      }
    }
  }
  int nh = 0, na = 0;
  std::vector<int> h_off(R), a_off(R);
  for (int i = 0; i < R; ++i) {
    h_off[i] = nh;
    a_off[i] = na;
    nh += pp.regions[i].num_eq();
    na += static_cast<int>(active[i].size());
  }
  const int dim = nx + 2 * nc + nh + na;
  const int off_s = nx, off_l = nx + nc, off_k = nx + 2 * nc, off_n = nx + 2 * nc + nh;

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

  const Eigen::VectorXd Ax = pp.consensus_residual(x_stacked);
  for (int i = 0; i < R; ++i) {
    const int ni = pp.regions[i].dim();
    const int xo = pp.region_offset(i);
    K.block(xo, xo, ni, ni) = sens[i].B;
    rhs.segment(xo, ni) = -sens[i].g;
    // consensus rows and their transpose in the stationarity block
    const Eigen::MatrixXd Ai = Eigen::MatrixXd(pp.consensus[i]);
    K.block(xo, off_l, ni, nc) = Ai.transpose();
    K.block(off_l, xo, nc, ni) = Ai;
    // local equalities
    const int hi = pp.regions[i].num_eq();
    K.block(xo, off_k + h_off[i], ni, hi) = sens[i].C.transpose();
    K.block(off_k + h_off[i], xo, hi, ni) = sens[i].C;
    // active bounds
    for (std::size_t a = 0; a < active[i].size(); ++a) {
      const int row = off_n + a_off[i] + static_cast<int>(a);
      K(row, xo + active[i][a]) = 1.0;
      K(xo + active[i][a], row) = 1.0;
    }
  }
  // s stationarity: mu s - lambda_qp = -lambda
  for (int r = 0; r < nc; ++r) {
    K(off_s + r, off_s + r) = mu;
    K(off_s + r, off_l + r) = -1.0;
    rhs[off_s + r] = -lambda[r];
    // consensus rows: A dx - s = -A x
    K(off_l + r, off_s + r) = -1.0;
    rhs[off_l + r] = -Ax[r];
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::VectorXd u = lu.solve(rhs);
  const double rel = (K * u - rhs).lpNorm<Eigen::Infinity>() /
                     (1.0 + rhs.lpNorm<Eigen::Infinity>());
  if (!u.allFinite() || rel > qp_residual_tol) {
    // Identify a region whose constraint block lost row rank, if any.
    for (int i = 0; i < R; ++i) {
      const int ni = pp.regions[i].dim();
      const int hi = pp.regions[i].num_eq();
      const int nai = static_cast<int>(active[i].size());
      Eigen::MatrixXd CE = Eigen::MatrixXd::Zero(hi + nai, ni);
      CE.topRows(hi) = sens[i].C;
      for (int a = 0; a < nai; ++a) CE(hi + a, active[i][a]) = 1.0;
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(CE);
      if (qr.rank() < hi + nai) {
        throw std::runtime_error(
            "coordination QP singular: region " + std::to_string(i) +
            " has rank-deficient [C; E] (" + std::to_string(qr.rank()) + " of " +
            std::to_string(hi + nai) + " rows independent)");
      }
    }
    throw std::runtime_error("coordination QP solve failed, relative residual " +
                             std::to_string(rel));
  }

  CoordinationResult res;
  res.dx.resize(R);
  for (int i = 0; i < R; ++i)
    res.dx[i] = u.segment(pp.region_offset(i), pp.regions[i].dim());
  res.s = u.segment(off_s, nc);
  res.lambda_qp = u.segment(off_l, nc);
  res.rel_residual = rel;
  res.wall_seconds = seconds_since(t0);
  return res;
}

ConvergenceReport run_aladin(const PartitionedProblem& pp, const AladinConfig& cfg,
                             const AladinOptions& opts) {
  const int R = static_cast<int>(pp.regions.size());
  const int nx = pp.total_dim();
  const int nc = pp.num_consensus_rows();

  ConvergenceReport report;
  report.algorithm =
      cfg.hessian == HessianMode::exact ? Algorithm::aladin : Algorithm::aladin_bfgs;

  std::vector<RegionNlp> nlps;
  nlps.reserve(R);
  std::vector<Eigen::VectorXd> sigma(R);
  std::vector<int> aux_count(R, 0);
  for (int i = 0; i < R; ++i) {
    nlps.emplace_back(pp.regions[i], pp.gamma);
    sigma[i] = make_sigma(pp.regions[i]);
    for (const LocalBus& b : pp.regions[i].buses)
      if (b.is_aux) ++aux_count[i];
  }
  report.comm.n_list.resize(R);
  for (int i = 0; i < R; ++i) report.comm.n_list[i] = pp.regions[i].core_dim();
  report.comm.nfw_bound = worst_case_forward(report.comm.n_list, report.algorithm);
  report.comm.nbw_bound = worst_case_backward(report.comm.n_list, report.algorithm);
  report.comm.binaries_bound = worst_case_binaries(report.comm.n_list);

  InteriorPointSolver solver(cfg.local_tol);

  Eigen::VectorXd z(nx);
  for (int i = 0; i < R; ++i)
    z.segment(pp.region_offset(i), pp.regions[i].dim()) = flat_start(pp.regions[i]);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nc);
  if (opts.z0 && opts.z0->size() == nx) z = *opts.z0;
  if (opts.lambda0 && opts.lambda0->size() == nc) lambda = *opts.lambda0;
  double rho = cfg.rho0, mu = cfg.mu0;
  const double rho_floor = cfg.rho0 * cfg.rho_floor_factor;
  double prev_cons = -1.0;  // guarded-rule watchdog state
  int damp_left = 0;

  Eigen::VectorXd x = z;
  std::vector<Eigen::VectorXd> warm_x(R), kappa(R), eta(R);
  std::vector<std::vector<int>> active(R);
  std::vector<Eigen::MatrixXd> B_qn(R);       // BFGS state
  std::vector<Eigen::VectorXd> prev_x(R), prev_g(R);
  std::vector<Eigen::MatrixXd> prev_C(R);
  bool have_prev = false;

  for (int i = 0; i < R; ++i) warm_x[i] = z.segment(pp.region_offset(i), pp.regions[i].dim());

  for (int k = 0; k < cfg.max_iters; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.rho = rho;
    rec.mu = mu;

    // Step 1: augmented local problems, one per region.
    std::vector<NlpResult> local(R);
    std::vector<double> t_local(R, 0.0);
    std::string local_error;
    auto solve_one = [&](int i) {
      const auto t0 = Clock::now();
      try {
        const Eigen::VectorXd zi = z.segment(pp.region_offset(i), pp.regions[i].dim());
        const Eigen::VectorXd lin = pp.consensus[i].transpose() * lambda;
        nlps[i].set_augmentation(lin, rho * sigma[i], zi);
        const Eigen::VectorXd* k0 = kappa[i].size() > 0 ? &kappa[i] : nullptr;
        local[i] = solver.solve(nlps[i], warm_x[i], k0, cfg.local_mode, &zi);
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
      eta[i] = local[i].eta;
      active[i] = local[i].active_set;
    }
    if (report.status == RunStatus::failed) break;
    rec.t_local_max = *std::max_element(t_local.begin(), t_local.end());
    report.t_local_hat = std::max(report.t_local_hat, rec.t_local_max);

    const Eigen::VectorXd Ax = pp.consensus_residual(x);
    rec.consensus_inf = nc > 0 ? Ax.lpNorm<Eigen::Infinity>() : 0.0;
    rec.primal_gap_inf = (x - z).lpNorm<Eigen::Infinity>();
    rec.dual_res_inf = dual_residual(pp, x, lambda, kappa, eta);
    if (opts.reference) {
      rec.dist_to_opt_inf = distance_to_reference(pp, x, *opts.reference);
      rec.subopt = suboptimality(generation_cost(pp.grid, pp.glue(x)),
                                 opts.reference->f_star);
    } else {
      rec.dist_to_opt_inf = std::nan("");
      rec.subopt = std::nan("");
    }

    // Step 2: termination on the local minimizers.
    if (check_termination(Ax, x, z, cfg.eps)) {
      rec.fw_floats = worst_case_forward(report.comm.n_list, Algorithm::admm);
      rec.bw_floats = 0;
      report.comm.fw_total += rec.fw_floats;
      report.records.push_back(rec);
      report.status = RunStatus::converged;
      report.iterations = k + 1;
      break;
    }

    // Step 3: sensitivities.
    std::vector<Sensitivities> sens(R);
    long fw = 0, bw = 0, slack_extra = 0;
    for (int i = 0; i < R; ++i) {
      const Region& reg = pp.regions[i];
      const int ni = reg.dim(), core = reg.core_dim();
      const int pf_rows = 2 * reg.num_buses();
      Sensitivities& si = sens[i];
      si.g = nlps[i].core_gradient(local[i].x);
      si.C = nlps[i].constraint_jacobian(local[i].x);
      if (cfg.hessian == HessianMode::exact) {
        si.B_raw = nlps[i].core_lagrangian_hessian(local[i].x, local[i].kappa);
        si.B = cfg.hessian_eps0 > 0 ? regularize_hessian(si.B_raw, cfg.hessian_eps0) : si.B_raw;
        fw += count_nonzero_payload(si.g, si.B_raw, si.C, core, pf_rows);
        const long full = nnz_vec(si.g, ni) + nnz_upper(si.B_raw, ni) +
                          nnz_block(si.C, si.C.rows(), ni);
        slack_extra += full - count_nonzero_payload(si.g, si.B_raw, si.C, core, pf_rows);
      } else {
        if (!have_prev) {
          const Eigen::MatrixXd H =
              nlps[i].core_lagrangian_hessian(local[i].x, local[i].kappa);
          Eigen::VectorXd d = H.diagonal().cwiseAbs().cwiseMax(cfg.hessian_eps0);
          B_qn[i] = d.asDiagonal();
        } else {
          // Curvature pair for the gradient of f_i + kappa^T h_i at the fixed
          // current kappa. This is the quantity the augmented-Lagrangian
          // identity g(lambda) = rho*Sigma*(z - x) - A_i'lambda recovers at
          // exact local solutions, but evaluating the exact gradients directly
          // keeps the pair free of multiplier jumps between iterations.
          const Eigen::VectorXd s = (local[i].x - prev_x[i]).head(core);
          const Eigen::VectorXd y =
              si.g + si.C.leftCols(core).transpose() * local[i].kappa -
              (prev_g[i] + prev_C[i].leftCols(core).transpose() * local[i].kappa);
          B_qn[i] = bfgs_update(B_qn[i], s, y);
        }
        si.B_raw = B_qn[i];
        si.B = B_qn[i];
        // BFGS message: gradient, Jacobian, and the n-vector the coordinator
        // needs for the curvature pair; the Hessian itself stays local.
        long core_payload = nnz_vec(si.g, core) +
                            nnz_block(si.C, pf_rows, core) + core;
        fw += core_payload;
        const long full = nnz_vec(si.g, ni) + nnz_block(si.C, si.C.rows(), ni) + ni;
        slack_extra += full - core_payload;
      }
      // BFGS curvature bookkeeping for the next iteration.
      if (cfg.hessian == HessianMode::bfgs) {
        prev_x[i] = local[i].x;
        prev_g[i] = si.g;
        prev_C[i] = si.C;
      }
    }
    have_prev = true;

    // Step 4: coordination QP.
    CoordinationResult coord;
    try {
      coord = solve_coordination_qp(pp, sens, active, x, lambda, mu, cfg.qp_residual_tol);
    } catch (const std::exception& e) {
      report.status = RunStatus::failed;
      report.error = e.what();
      report.records.push_back(rec);
      break;
    }
    rec.t_coord = coord.wall_seconds;
    rec.qp_rel_residual = coord.rel_residual;
    report.t_coord_hat = std::max(report.t_coord_hat, rec.t_coord);
    Eigen::VectorXd dx(nx);
    for (int i = 0; i < R; ++i)
      dx.segment(pp.region_offset(i), pp.regions[i].dim()) = coord.dx[i];
    for (int i = 0; i < R; ++i) {
      bw += nnz_vec(coord.dx[i], pp.regions[i].core_dim()) + 4L * aux_count[i];
    }
    rec.fw_floats = fw;
    rec.bw_floats = bw;
    rec.slack_extra = slack_extra;
    report.comm.fw_total += fw;
    report.comm.bw_total += bw;
    report.comm.nfw_actual_max = std::max(report.comm.nfw_actual_max, fw);
    report.comm.nbw_actual_max = std::max(report.comm.nbw_actual_max, bw);
    report.comm.slack_extra_max = std::max(report.comm.slack_extra_max, slack_extra);

    // Step 5: update.
    double alpha = 1.0;
    if (cfg.step_rule == StepRule::guarded) {
      // Watchdog on the consensus residual: take full steps while progress
      // holds, but when the residual more than doubles between iterations,
      // damp both updates (alpha = 1/2) for the next damp_window iterations
      // before retrying full steps.
      if (prev_cons >= 0.0 && rec.consensus_inf > 2.0 * prev_cons)
        damp_left = cfg.damp_window;
      if (damp_left > 0) {
        alpha = 0.5;
        --damp_left;
      }
      z += alpha * (x - z + dx);
      lambda += alpha * (coord.lambda_qp - lambda);
      prev_cons = rec.consensus_inf;
    } else {
      z = x + dx;
      lambda = coord.lambda_qp;
    }
    // Project the reference onto the local boxes: a z outside its bounds is
    // an unreachable proximal target and destabilizes the next local solves
    // once rho is large.
    for (int i = 0; i < R; ++i) {
      const int off = pp.region_offset(i);
      const Eigen::VectorXd lo = pp.regions[i].lower(), up = pp.regions[i].upper();
      for (int j = 0; j < pp.regions[i].dim(); ++j)
        z[off + j] = std::clamp(z[off + j], lo[j], up[j]);
    }
    rec.alpha = alpha;

    // Penalty parameters grow only after an accepted full step.
    if (alpha == 1.0) {
      if (rho < cfg.rho_max) rho *= cfg.r_rho;
      if (cfg.r_rho < 1.0) rho = std::max(rho, rho_floor);
      if (mu < cfg.mu_max) mu *= cfg.r_mu;
    }

    report.records.push_back(rec);
    report.iterations = k + 1;
  }

  if (report.status != RunStatus::converged && report.status != RunStatus::failed)
    report.status = RunStatus::max_iters;
  report.x_stacked = x;
  report.z_final = z;
  report.lambda_final = lambda;
  report.x_glued = pp.glue(x);
  report.objective = generation_cost(pp.grid, report.x_glued);
  report.final_consensus_inf = consensus_violation(pp, x);
  return report;
}

}  // namespace dopf
