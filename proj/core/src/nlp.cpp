#include "dopf/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace dopf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFracToBoundary = 0.995;
constexpr double kMuShrink = 5.0;
}  // namespace

std::vector<int> detect_active_set(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper,
                                   double active_set_tol) {
  std::vector<int> act;
  for (int j = 0; j < x.size(); ++j) {
    const double range = upper[j] - lower[j];
    const double scale = active_set_tol * std::max(1.0, std::isfinite(range) ? range : 1.0);
    const double dl = std::isfinite(lower[j]) ? x[j] - lower[j] : kInf;
    const double du = std::isfinite(upper[j]) ? upper[j] - x[j] : kInf;
    if (std::min(dl, du) <= scale) act.push_back(j);
  }
  return act;
}

Eigen::MatrixXd regularize_hessian(const Eigen::MatrixXd& B, double eps0) {
  if (!B.allFinite()) throw std::invalid_argument("non-finite Hessian entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("Hessian eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] < -eps0)
      lam[i] = -lam[i];
    else if (lam[i] <= eps0)
      lam[i] = eps0;
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

// Free/fixed split: variables with l == u are pinned and eliminated from the
// barrier problem; their multipliers are recovered from stationarity.
struct VarSplit {
  std::vector<int> free_idx;
  std::vector<int> fixed_idx;
  Eigen::VectorXd fixed_values;
};

VarSplit split_vars(const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
  VarSplit s;
  std::vector<double> fixed_vals;
  for (int j = 0; j < l.size(); ++j) {
    if (l[j] == u[j]) {
      s.fixed_idx.push_back(j);
      fixed_vals.push_back(l[j]);
    } else {
      s.free_idx.push_back(j);
    }
  }
  s.fixed_values = Eigen::Map<Eigen::VectorXd>(fixed_vals.data(),
                                               static_cast<long>(fixed_vals.size()));
  return s;
}

Eigen::VectorXd gather(const Eigen::VectorXd& full, const std::vector<int>& idx) {
  Eigen::VectorXd r(static_cast<long>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) r[static_cast<long>(i)] = full[idx[i]];
  return r;
}

}  // namespace

NlpResult InteriorPointSolver::solve(const NlpProblem& p, const Eigen::VectorXd& x0,
                                     const Eigen::VectorXd* kappa0, SolveMode mode,
                                     const Eigen::VectorXd* proximal_center) const {
  const int n_full = p.num_vars();
  const int m = p.num_eq();
  const Eigen::VectorXd lfull = p.lower();
  const Eigen::VectorXd ufull = p.upper();
  const VarSplit split = split_vars(lfull, ufull);
  const int n = static_cast<int>(split.free_idx.size());

  Eigen::VectorXd xfull = x0;
  for (size_t i = 0; i < split.fixed_idx.size(); ++i)
    xfull[split.fixed_idx[i]] = split.fixed_values[static_cast<long>(i)];

  const Eigen::VectorXd l = gather(lfull, split.free_idx);
  const Eigen::VectorXd u = gather(ufull, split.free_idx);

  // strictly interior start
  Eigen::VectorXd x = gather(xfull, split.free_idx);
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(l[j]) && std::isfinite(u[j])) {
      const double pad = 0.01 * (u[j] - l[j]);
      x[j] = std::clamp(x[j], l[j] + pad, u[j] - pad);
    } else if (std::isfinite(l[j])) {
      x[j] = std::max(x[j], l[j] + 0.01 * std::max(1.0, std::abs(l[j])));
    } else if (std::isfinite(u[j])) {
      x[j] = std::min(x[j], u[j] - 0.01 * std::max(1.0, std::abs(u[j])));
    }
  }

  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(m);
  if (kappa0 && kappa0->size() == m) kappa = *kappa0;

  auto scatter = [&](const Eigen::VectorXd& xr) {
    Eigen::VectorXd f = xfull;
    for (int j = 0; j < n; ++j) f[split.free_idx[j]] = xr[j];
    return f;
  };

  double mu = 1e-1;
  Eigen::VectorXd zl(n), zu(n);
  for (int j = 0; j < n; ++j) {
    zl[j] = std::isfinite(l[j]) ? mu / (x[j] - l[j]) : 0.0;
    zu[j] = std::isfinite(u[j]) ? mu / (u[j] - x[j]) : 0.0;
  }

  double merit_nu = 10.0;

  NlpResult res;
  res.status = NlpStatus::max_iters;

  auto barrier_value = [&](const Eigen::VectorXd& xr, double& fval) -> double {
    const Eigen::VectorXd xf = scatter(xr);
    fval = p.objective(xf);
    double phi = fval;
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(l[j])) {
        const double d = xr[j] - l[j];
        if (d <= 0) return kInf;
        phi -= mu * std::log(d);
      }
      if (std::isfinite(u[j])) {
        const double d = u[j] - xr[j];
        if (d <= 0) return kInf;
        phi -= mu * std::log(d);
      }
    }
    return phi;
  };

  int it = 0;
  for (; it < tol_.max_inner_iters; ++it) {
    const Eigen::VectorXd xf = scatter(x);
    const Eigen::VectorXd gf = p.objective_gradient(xf);
    const Eigen::VectorXd c = p.constraints(xf);
    const Eigen::MatrixXd Jf = p.constraint_jacobian(xf);
    const Eigen::VectorXd g = gather(gf, split.free_idx);
    Eigen::MatrixXd J(m, n);
    for (int j = 0; j < n; ++j) J.col(j) = Jf.col(split.free_idx[j]);

    const Eigen::VectorXd r_dual = g + J.transpose() * kappa - zl + zu;
    double comp0 = 0.0, comp_mu = 0.0;
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(l[j])) {
        comp0 = std::max(comp0, std::abs(zl[j] * (x[j] - l[j])));
        comp_mu = std::max(comp_mu, std::abs(zl[j] * (x[j] - l[j]) - mu));
      }
      if (std::isfinite(u[j])) {
        comp0 = std::max(comp0, std::abs(zu[j] * (u[j] - x[j])));
        comp_mu = std::max(comp_mu, std::abs(zu[j] * (u[j] - x[j]) - mu));
      }
    }
    const double viol = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    // Scale the dual and complementarity residuals by the multiplier
    // magnitude so the stop test stays meaningful on badly scaled problems
    // (large proximal weights push the natural KKT scale far above 1).
    const double mult_avg =
        (kappa.lpNorm<1>() + zl.lpNorm<1>() + zu.lpNorm<1>()) / std::max(1, m + 2 * n);
    const double sd = std::max(1.0, mult_avg / 100.0);
    const double err0 = std::max({r_dual.lpNorm<Eigen::Infinity>() / sd, viol, comp0 / sd});
    const double err_mu =
        std::max({r_dual.lpNorm<Eigen::Infinity>() / sd, viol, comp_mu / sd});

    if (trace_)
      *trace_ << it << "," << p.objective(xf) << "," << viol << "," << err0 << ","
              << mu << "," << r_dual.lpNorm<Eigen::Infinity>() << "," << comp0 << ","
              << kappa.lpNorm<Eigen::Infinity>() << ","
              << std::max(zl.maxCoeff(), zu.maxCoeff()) << "," << merit_nu << "\n";

    double stop_tol = tol_.kkt_tol;
    if (mode == SolveMode::approximate && proximal_center) {
      const double dist = (*proximal_center - xf).lpNorm<Eigen::Infinity>();
      stop_tol = std::max(tol_.kkt_tol, tol_.inexact_factor * dist);
    }
    // Tolerances below ~1e-8 are out of reach for the barrier loop itself;
    // the crossover polish below closes the remaining gap.
    if (err0 <= std::max(stop_tol, 1e-8) && viol <= std::max(tol_.feas_tol, 1e-8)) {
      res.status = NlpStatus::solved;
      res.kkt_residual = err0;
      res.constraint_violation = viol;
      break;
    }
    res.kkt_residual = err0;
    res.constraint_violation = viol;

    if (err_mu <= 10.0 * mu) mu = std::max(tol_.kkt_tol / 10.0, mu / kMuShrink);

    const Eigen::MatrixXd H_full = p.lagrangian_hessian(xf, kappa);
    Eigen::MatrixXd H(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) H(a, b) = H_full(split.free_idx[a], split.free_idx[b]);

    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd rhs_x = -g - J.transpose() * kappa;
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(l[j])) {
        sigma[j] += zl[j] / (x[j] - l[j]);
        rhs_x[j] += mu / (x[j] - l[j]);
      }
      if (std::isfinite(u[j])) {
        sigma[j] += zu[j] / (u[j] - x[j]);
        rhs_x[j] -= mu / (u[j] - x[j]);
      }
    }

    // Newton system with inertia-style regularization by retry
    Eigen::VectorXd dx(n), dkappa(m);
    double delta = 0.0;
    bool have_step = false;
    for (int attempt = 0; attempt < 12 && !have_step; ++attempt) {
      Eigen::MatrixXd K(n + m, n + m);
      K.setZero();
      K.topLeftCorner(n, n) = H;
      K.topLeftCorner(n, n) += (sigma.array() + delta).matrix().asDiagonal();
      if (m > 0) {
        K.topRightCorner(n, m) = J.transpose();
        K.bottomLeftCorner(m, n) = J;
        K.bottomRightCorner(m, m) = -1e-10 * Eigen::MatrixXd::Identity(m, m);
      }
      Eigen::VectorXd rhs(n + m);
      rhs.head(n) = rhs_x;
      if (m > 0) rhs.tail(m) = -c;

      Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
      const Eigen::VectorXd sol = lu.solve(rhs);
      const double rel_res = (K * sol - rhs).norm() / std::max(1.0, rhs.norm());
      dx = sol.head(n);
      dkappa = m > 0 ? Eigen::VectorXd(sol.tail(m)) : Eigen::VectorXd(0);

      bool good = sol.allFinite() && rel_res < 1e-6;
      if (good && dx.squaredNorm() > 0) {
        // require positive curvature of the regularized reduced Hessian
        const double curv = dx.dot(H * dx) +
                            (sigma.array() + delta).matrix().cwiseProduct(dx).dot(dx);
        if (curv <= 1e-14 * dx.squaredNorm()) good = false;
      }
      if (good) {
        have_step = true;
      } else {
        delta = delta == 0.0 ? 1e-6 : delta * 10.0;
      }
    }
    if (!have_step) {
      res.status = NlpStatus::numerical_failure;
      break;
    }

    Eigen::VectorXd dzl = Eigen::VectorXd::Zero(n), dzu = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(l[j]))
        dzl[j] = (mu - zl[j] * (x[j] - l[j])) / (x[j] - l[j]) -
                 (zl[j] / (x[j] - l[j])) * dx[j];
      if (std::isfinite(u[j]))
        dzu[j] = (mu - zu[j] * (u[j] - x[j])) / (u[j] - x[j]) + (zu[j] / (u[j] - x[j])) * dx[j];
    }

    // fraction-to-boundary step limits
    double a_pr = 1.0, a_du = 1.0;
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(l[j]) && dx[j] < 0)
        a_pr = std::min(a_pr, -kFracToBoundary * (x[j] - l[j]) / dx[j]);
      if (std::isfinite(u[j]) && dx[j] > 0)
        a_pr = std::min(a_pr, kFracToBoundary * (u[j] - x[j]) / dx[j]);
      if (dzl[j] < 0) a_du = std::min(a_du, -kFracToBoundary * zl[j] / dzl[j]);
      if (dzu[j] < 0) a_du = std::min(a_du, -kFracToBoundary * zu[j] / dzu[j]);
    }

    // l1 merit backtracking; nu tracks the current multiplier estimate rather
    // than ratcheting monotonically, so one bad dual step cannot poison every
    // later line search
    if (m > 0) merit_nu = std::max(10.0, 1.1 * (kappa + dkappa).lpNorm<Eigen::Infinity>());
    double f0;
    const double phi0 = barrier_value(x, f0) + merit_nu * c.lpNorm<1>();
    double dir = g.dot(dx) - merit_nu * c.lpNorm<1>();
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(l[j])) dir -= mu * dx[j] / (x[j] - l[j]);
      if (std::isfinite(u[j])) dir += mu * dx[j] / (u[j] - x[j]);
    }
    double alpha = a_pr;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Eigen::VectorXd xt = x + alpha * dx;
      double ft;
      const double phit = barrier_value(xt, ft) +
                          merit_nu * p.constraints(scatter(xt)).lpNorm<1>();
      if (std::isfinite(phit) && phit <= phi0 + 1e-4 * alpha * std::min(dir, 0.0)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // fall back to the last (tiny) trial step; progress stalls otherwise
      alpha = std::max(alpha, 1e-10);
    }

    x += alpha * dx;
    kappa += alpha * dkappa;
    zl += a_du * dzl;
    zu += a_du * dzu;
    // keep bound duals within a large multiplicative corridor of mu/slack so
    // they cannot run away from the central path
    constexpr double kSigmaCap = 1e10;
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(l[j])) {
        const double zc = mu / (x[j] - l[j]);
        zl[j] = std::clamp(zl[j], zc / kSigmaCap, zc * kSigmaCap);
      }
      if (std::isfinite(u[j])) {
        const double zc = mu / (u[j] - x[j]);
        zu[j] = std::clamp(zu[j], zc / kSigmaCap, zc * kSigmaCap);
      }
    }
  }

  // Crossover polish: once the barrier loop has converged, pin the active
  // bounds exactly and take a few Newton steps on the equality-constrained
  // KKT system of the remaining variables. The barrier iterate stalls near
  // mu's floor (~1e-8 in x); the polished point reaches ~1e-12, which the
  // outer algorithms need to expose their local convergence rate.
  if (res.status == NlpStatus::solved) {
    std::vector<int> inact;
    std::vector<std::pair<int, double>> pinned;  // (free-var index, bound value)
    for (int j = 0; j < n; ++j) {
      const bool lo = std::isfinite(l[j]) && zl[j] >= x[j] - l[j];
      const bool hi = std::isfinite(u[j]) && zu[j] >= u[j] - x[j];
      if (lo || hi)
        pinned.emplace_back(j, lo ? l[j] : u[j]);
      else
        inact.push_back(j);
    }
    Eigen::VectorXd xp = x;
    for (const auto& [j, b] : pinned) xp[j] = b;
    Eigen::VectorXd kp = kappa;
    const int ni = static_cast<int>(inact.size());
    auto kkt_err = [&](const Eigen::VectorXd& xr, const Eigen::VectorXd& kr,
                       Eigen::VectorXd& stat, Eigen::VectorXd& c_out) {
      const Eigen::VectorXd xf = scatter(xr);
      const Eigen::VectorXd gf = p.objective_gradient(xf);
      const Eigen::MatrixXd Jf = p.constraint_jacobian(xf);
      const Eigen::VectorXd full = gather(gf, split.free_idx) +
                                   [&] {
                                     Eigen::MatrixXd J2(m, n);
                                     for (int j = 0; j < n; ++j)
                                       J2.col(j) = Jf.col(split.free_idx[j]);
                                     return Eigen::VectorXd(J2.transpose() * kr);
                                   }();
      stat.resize(ni);
      for (int a = 0; a < ni; ++a) stat[a] = full[inact[a]];
      c_out = p.constraints(xf);
      const double viol2 = m > 0 ? c_out.lpNorm<Eigen::Infinity>() : 0.0;
      return std::max(ni > 0 ? stat.lpNorm<Eigen::Infinity>() : 0.0, viol2);
    };
    Eigen::VectorXd stat, cres;
    double best = kkt_err(xp, kp, stat, cres);
    Eigen::VectorXd xbest = xp, kbest = kp;
    for (int pi = 0; pi < 3 && best > 1e-13; ++pi) {
      const Eigen::VectorXd xf = scatter(xp);
      const Eigen::MatrixXd H_full = p.lagrangian_hessian(xf, kp);
      const Eigen::MatrixXd Jf = p.constraint_jacobian(xf);
      Eigen::MatrixXd K(ni + m, ni + m);
      K.setZero();
      for (int a = 0; a < ni; ++a)
        for (int b = 0; b < ni; ++b)
          K(a, b) = H_full(split.free_idx[inact[a]], split.free_idx[inact[b]]);
      for (int r = 0; r < m; ++r)
        for (int a = 0; a < ni; ++a) {
          K(ni + r, a) = Jf(r, split.free_idx[inact[a]]);
          K(a, ni + r) = K(ni + r, a);
        }
      Eigen::VectorXd rhs(ni + m);
      rhs.head(ni) = -stat;
      if (m > 0) rhs.tail(m) = -cres;
      const Eigen::VectorXd sol = Eigen::PartialPivLU<Eigen::MatrixXd>(K).solve(rhs);
      if (!sol.allFinite()) break;
      Eigen::VectorXd xt = xp;
      for (int a = 0; a < ni; ++a) xt[inact[a]] += sol[a];
      const Eigen::VectorXd kt = kp + (m > 0 ? Eigen::VectorXd(sol.tail(m))
                                             : Eigen::VectorXd(0));
      bool inside = true;
      for (int a = 0; a < ni && inside; ++a) {
        const int j = inact[a];
        if (std::isfinite(l[j]) && xt[j] <= l[j]) inside = false;
        if (std::isfinite(u[j]) && xt[j] >= u[j]) inside = false;
      }
      if (!inside) break;
      const double e = kkt_err(xt, kt, stat, cres);
      if (!(e < best)) break;
      best = e;
      xp = xt;
      kp = kt;
      xbest = xp;
      kbest = kp;
    }
    // Accept only when the polished point beats the barrier iterate on the
    // same unscaled measure.
    Eigen::VectorXd stat0, c0;
    const double e_barrier = kkt_err(x, kappa, stat0, c0);
    if (best < e_barrier) {
      x = xbest;
      kappa = kbest;
      Eigen::VectorXd cfin;
      res.kkt_residual = kkt_err(x, kappa, stat0, cfin);
      res.constraint_violation = m > 0 ? cfin.lpNorm<Eigen::Infinity>() : 0.0;
    }
  }

  res.iterations = it;
  res.x = scatter(x);
  res.kappa = kappa;
  res.objective = p.objective(res.x);

  // signed bound multipliers; fixed variables absorb stationarity exactly
  res.eta = Eigen::VectorXd::Zero(n_full);
  for (int j = 0; j < n; ++j) res.eta[split.free_idx[j]] = zu[j] - zl[j];
  if (!split.fixed_idx.empty()) {
    const Eigen::VectorXd gf = p.objective_gradient(res.x);
    const Eigen::MatrixXd Jf = p.constraint_jacobian(res.x);
    const Eigen::VectorXd stat = gf + Jf.transpose() * kappa;
    for (int j : split.fixed_idx) res.eta[j] = -stat[j];
  }
  // Primal-dual activity test: a bound is active when its multiplier
  // dominates the primal distance (crossover at sqrt(mu)). This is stable
  // under small primal wobble near a strongly active bound, where the pure
  // distance test of detect_active_set can chatter between iterations.
  res.active_set.clear();
  for (int j : split.fixed_idx) res.active_set.push_back(j);
  for (int j = 0; j < n; ++j) {
    const bool lo = std::isfinite(l[j]) && zl[j] >= x[j] - l[j];
    const bool hi = std::isfinite(u[j]) && zu[j] >= u[j] - x[j];
    if (lo || hi) res.active_set.push_back(split.free_idx[j]);
  }
  std::sort(res.active_set.begin(), res.active_set.end());
  if (res.status == NlpStatus::max_iters &&
      res.constraint_violation > std::sqrt(tol_.feas_tol))
    res.status = NlpStatus::infeasible;
  return res;
}

}  // namespace dopf
