#include "dopf/opf_nlp.hpp"

#include <cmath>

namespace dopf {

RegionNlp::RegionNlp(const Region& region, double gamma)
    : region_(&region), gamma_(gamma) {}

void RegionNlp::set_augmentation(const Eigen::VectorXd& linear,
                                 const Eigen::VectorXd& prox_diag,
                                 const Eigen::VectorXd& prox_center) {
  if (linear.size() != region_->dim() || prox_diag.size() != region_->dim() ||
      prox_center.size() != region_->dim())
    throw std::invalid_argument("augmentation dimension mismatch");
  lin_ = linear;
  prox_d_ = prox_diag;
  prox_c_ = prox_center;
  augmented_ = true;
}

void RegionNlp::clear_augmentation() { augmented_ = false; }

double RegionNlp::core_objective(const Eigen::VectorXd& x) const {
  double f = 0.0;
  for (int i = 0; i < region_->num_buses(); ++i) {
    const auto& b = region_->buses[i];
    const double p = x[4 * i + 2];
    const double q = x[4 * i + 3];
    if (b.has_gen) f += b.c1 * p * p + b.c2 * p + b.c3;
    if (!b.is_aux) f += gamma_ * q * q;
  }
  return f;
}

Eigen::VectorXd RegionNlp::core_gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(region_->dim());
  for (int i = 0; i < region_->num_buses(); ++i) {
    const auto& b = region_->buses[i];
    if (b.has_gen) g[4 * i + 2] = 2.0 * b.c1 * x[4 * i + 2] + b.c2;
    if (!b.is_aux) g[4 * i + 3] = 2.0 * gamma_ * x[4 * i + 3];
  }
  return g;
}

double RegionNlp::objective(const Eigen::VectorXd& x) const {
  double f = core_objective(x);
  if (augmented_) {
    f += lin_.dot(x);
    const Eigen::VectorXd d = x - prox_c_;
    f += 0.5 * d.cwiseProduct(prox_d_).dot(d);
  }
  return f;
}

Eigen::VectorXd RegionNlp::objective_gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = core_gradient(x);
  if (augmented_) g += lin_ + prox_d_.cwiseProduct(x - prox_c_);
  return g;
}

Eigen::VectorXd RegionNlp::constraints(const Eigen::VectorXd& x) const {
  const Region& r = *region_;
  const int N = r.num_buses();
  Eigen::VectorXd c(r.num_eq());
  for (int i = 0; i < N; ++i) {
    const double vi = x[4 * i + 1];
    const double ti = x[4 * i + 0];
    double P = vi * vi * r.Y.G(i, i);
    double Q = -vi * vi * r.Y.B(i, i);
    for (int j = 0; j < N; ++j) {
      if (j == i || (r.Y.G(i, j) == 0.0 && r.Y.B(i, j) == 0.0)) continue;
      const double vj = x[4 * j + 1];
      const double dth = ti - x[4 * j + 0];
      const double co = std::cos(dth), si = std::sin(dth);
      P += vi * vj * (r.Y.G(i, j) * co + r.Y.B(i, j) * si);
      Q += vi * vj * (r.Y.G(i, j) * si - r.Y.B(i, j) * co);
    }
    c[2 * i + 0] = P - x[4 * i + 2] + r.buses[i].p_demand;
    c[2 * i + 1] = Q - x[4 * i + 3] + r.buses[i].q_demand;
  }
  int row = 2 * N;
  if (r.reference_local_bus >= 0) {
    c[row++] = x[4 * r.reference_local_bus + 0];
    c[row++] = x[4 * r.reference_local_bus + 1] - 1.0;
  }
  for (const auto& ll : r.limited_lines) {
    const int k = ll.local_from, l = ll.local_to;
    const LineFlow f = line_flow(x[4 * k], x[4 * k + 1], x[4 * l], x[4 * l + 1],
                                 r.Y.G(k, l), r.Y.B(k, l));
    c[row++] = f.p * f.p + f.q * f.q - x[ll.slack_index];
  }
  return c;
}

namespace {

// Gradients of the directed flows p_kl, q_kl with respect to
// (theta_k, theta_l, v_k, v_l); G, B are the off-diagonal Y entries.
struct FlowGrad {
  double p, q;
  Eigen::Vector4d dp, dq;  // order: theta_k, theta_l, v_k, v_l
};

FlowGrad flow_gradients(double tk, double vk, double tl, double vl, double G, double B) {
  const double co = std::cos(tk - tl), si = std::sin(tk - tl);
  const double U = G * co + B * si;   // d(si-part)/dtheta of V; see below
  const double W = -G * si + B * co;  // dU/dtheta_k
  const double V = G * si - B * co;
  FlowGrad f;
  f.p = -vk * vk * G + vk * vl * U;
  f.q = vk * vk * B + vk * vl * V;
  f.dp << vk * vl * W, -vk * vl * W, -2.0 * vk * G + vl * U, vk * U;
  f.dq << vk * vl * U, -vk * vl * U, 2.0 * vk * B + vl * V, vk * V;
  return f;
}

// Hessian of p_kl (and q_kl) in the same 4-variable order.
void flow_hessians(double tk, double vk, double tl, double vl, double G, double B,
                   Eigen::Matrix4d& Hp, Eigen::Matrix4d& Hq) {
  const double co = std::cos(tk - tl), si = std::sin(tk - tl);
  const double U = G * co + B * si;
  const double W = -G * si + B * co;
  const double V = G * si - B * co;  // = -W'; note W = -V is an identity here
  Hp.setZero();
  Hq.setZero();
  // p = -vk^2 G + vk vl U
  Hp(0, 0) = -vk * vl * U;
  Hp(1, 1) = -vk * vl * U;
  Hp(0, 1) = Hp(1, 0) = vk * vl * U;
  Hp(0, 2) = Hp(2, 0) = vl * W;
  Hp(0, 3) = Hp(3, 0) = vk * W;
  Hp(1, 2) = Hp(2, 1) = -vl * W;
  Hp(1, 3) = Hp(3, 1) = -vk * W;
  Hp(2, 3) = Hp(3, 2) = U;
  Hp(2, 2) = -2.0 * G;
  // q = vk^2 B + vk vl V
  Hq(0, 0) = vk * vl * W;
  Hq(1, 1) = vk * vl * W;
  Hq(0, 1) = Hq(1, 0) = -vk * vl * W;
  Hq(0, 2) = Hq(2, 0) = vl * U;
  Hq(0, 3) = Hq(3, 0) = vk * U;
  Hq(1, 2) = Hq(2, 1) = -vl * U;
  Hq(1, 3) = Hq(3, 1) = -vk * U;
  Hq(2, 3) = Hq(3, 2) = V;
  Hq(2, 2) = 2.0 * B;
}

}  // namespace

Eigen::MatrixXd RegionNlp::constraint_jacobian(const Eigen::VectorXd& x) const {
  const Region& r = *region_;
  const int N = r.num_buses();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(r.num_eq(), r.dim());
  for (int i = 0; i < N; ++i) {
    const double vi = x[4 * i + 1];
    const double ti = x[4 * i + 0];
    double dP_dvi = 2.0 * vi * r.Y.G(i, i);
    double dQ_dvi = -2.0 * vi * r.Y.B(i, i);
    double dP_dti = 0.0, dQ_dti = 0.0;
    for (int j = 0; j < N; ++j) {
      if (j == i || (r.Y.G(i, j) == 0.0 && r.Y.B(i, j) == 0.0)) continue;
      const double vj = x[4 * j + 1];
      const double dth = ti - x[4 * j + 0];
      const double co = std::cos(dth), si = std::sin(dth);
      const double U = r.Y.G(i, j) * co + r.Y.B(i, j) * si;
      const double W = -r.Y.G(i, j) * si + r.Y.B(i, j) * co;
      const double V = r.Y.G(i, j) * si - r.Y.B(i, j) * co;
      dP_dti += vi * vj * W;
      dP_dvi += vj * U;
      J(2 * i + 0, 4 * j + 0) = -vi * vj * W;
      J(2 * i + 0, 4 * j + 1) = vi * U;
      dQ_dti += vi * vj * U;
      dQ_dvi += vj * V;
      J(2 * i + 1, 4 * j + 0) = -vi * vj * U;
      J(2 * i + 1, 4 * j + 1) = vi * V;
    }
    J(2 * i + 0, 4 * i + 0) = dP_dti;
    J(2 * i + 0, 4 * i + 1) = dP_dvi;
    J(2 * i + 0, 4 * i + 2) = -1.0;
    J(2 * i + 1, 4 * i + 0) = dQ_dti;
    J(2 * i + 1, 4 * i + 1) = dQ_dvi;
    J(2 * i + 1, 4 * i + 3) = -1.0;
  }
  int row = 2 * N;
  if (r.reference_local_bus >= 0) {
    J(row++, 4 * r.reference_local_bus + 0) = 1.0;
    J(row++, 4 * r.reference_local_bus + 1) = 1.0;
  }
  for (const auto& ll : r.limited_lines) {
    const int k = ll.local_from, l = ll.local_to;
    const FlowGrad f = flow_gradients(x[4 * k], x[4 * k + 1], x[4 * l], x[4 * l + 1],
                                      r.Y.G(k, l), r.Y.B(k, l));
    const int idx[4] = {4 * k + 0, 4 * l + 0, 4 * k + 1, 4 * l + 1};
    for (int a = 0; a < 4; ++a)
      J(row, idx[a]) = 2.0 * f.p * f.dp[a] + 2.0 * f.q * f.dq[a];
    J(row, ll.slack_index) = -1.0;
    ++row;
  }
  return J;
}

Eigen::MatrixXd RegionNlp::core_lagrangian_hessian(const Eigen::VectorXd& x,
                                                   const Eigen::VectorXd& kappa) const {
  const Region& r = *region_;
  const int N = r.num_buses();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(r.dim(), r.dim());
  for (int i = 0; i < N; ++i) {
    const auto& b = r.buses[i];
    if (b.has_gen) H(4 * i + 2, 4 * i + 2) += 2.0 * b.c1;
    if (!b.is_aux) H(4 * i + 3, 4 * i + 3) += 2.0 * gamma_;
  }
  for (int i = 0; i < N; ++i) {
    const double kp = kappa[2 * i + 0];
    const double kq = kappa[2 * i + 1];
    const double vi = x[4 * i + 1];
    const double ti = x[4 * i + 0];
    H(4 * i + 1, 4 * i + 1) += kp * 2.0 * r.Y.G(i, i) - kq * 2.0 * r.Y.B(i, i);
    for (int j = 0; j < N; ++j) {
      if (j == i || (r.Y.G(i, j) == 0.0 && r.Y.B(i, j) == 0.0)) continue;
      const double vj = x[4 * j + 1];
      const double dth = ti - x[4 * j + 0];
      const double co = std::cos(dth), si = std::sin(dth);
      const double U = r.Y.G(i, j) * co + r.Y.B(i, j) * si;
      const double W = -r.Y.G(i, j) * si + r.Y.B(i, j) * co;
      const double V = r.Y.G(i, j) * si - r.Y.B(i, j) * co;
      const int ti_ = 4 * i + 0, tj_ = 4 * j + 0, vi_ = 4 * i + 1, vj_ = 4 * j + 1;
      // P_i off-diagonal term  vi vj U
      H(ti_, ti_) += kp * (-vi * vj * U);
      H(tj_, tj_) += kp * (-vi * vj * U);
      H(ti_, tj_) += kp * (vi * vj * U);
      H(tj_, ti_) += kp * (vi * vj * U);
      H(ti_, vi_) += kp * (vj * W);
      H(vi_, ti_) += kp * (vj * W);
      H(ti_, vj_) += kp * (vi * W);
      H(vj_, ti_) += kp * (vi * W);
      H(tj_, vi_) += kp * (-vj * W);
      H(vi_, tj_) += kp * (-vj * W);
      H(tj_, vj_) += kp * (-vi * W);
      H(vj_, tj_) += kp * (-vi * W);
      H(vi_, vj_) += kp * U;
      H(vj_, vi_) += kp * U;
      // Q_i off-diagonal term  vi vj V
      H(ti_, ti_) += kq * (vi * vj * W);
      H(tj_, tj_) += kq * (vi * vj * W);
      H(ti_, tj_) += kq * (-vi * vj * W);
      H(tj_, ti_) += kq * (-vi * vj * W);
      H(ti_, vi_) += kq * (vj * U);
      H(vi_, ti_) += kq * (vj * U);
      H(ti_, vj_) += kq * (vi * U);
      H(vj_, ti_) += kq * (vi * U);
      H(tj_, vi_) += kq * (-vj * U);
      H(vi_, tj_) += kq * (-vj * U);
      H(tj_, vj_) += kq * (-vi * U);
      H(vj_, tj_) += kq * (-vi * U);
      H(vi_, vj_) += kq * V;
      H(vj_, vi_) += kq * V;
    }
  }
  int row = 2 * N;
  if (r.reference_local_bus >= 0) row += 2;  // linear rows, no curvature
  for (const auto& ll : r.limited_lines) {
    const double kl_mult = kappa[row++];
    const int k = ll.local_from, l = ll.local_to;
    const double G = r.Y.G(k, l), B = r.Y.B(k, l);
    const FlowGrad f =
        flow_gradients(x[4 * k], x[4 * k + 1], x[4 * l], x[4 * l + 1], G, B);
    Eigen::Matrix4d Hp, Hq;
    flow_hessians(x[4 * k], x[4 * k + 1], x[4 * l], x[4 * l + 1], G, B, Hp, Hq);
    const Eigen::Matrix4d Hc = 2.0 * (f.dp * f.dp.transpose() + f.p * Hp +
                                      f.dq * f.dq.transpose() + f.q * Hq);
    const int idx[4] = {4 * k + 0, 4 * l + 0, 4 * k + 1, 4 * l + 1};
    for (int a = 0; a < 4; ++a)
      for (int bb = 0; bb < 4; ++bb) H(idx[a], idx[bb]) += kl_mult * Hc(a, bb);
  }
  return H;
}

Eigen::MatrixXd RegionNlp::lagrangian_hessian(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& kappa) const {
  Eigen::MatrixXd H = core_lagrangian_hessian(x, kappa);
  if (augmented_) H += prox_d_.asDiagonal();
  return H;
}

Eigen::VectorXd make_sigma(const Region& region) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(region.dim());
  for (int i = 0; i < region.num_buses(); ++i) {
    s[4 * i + 0] = 100.0;
    s[4 * i + 1] = 100.0;
  }
  return s;
}

Eigen::VectorXd flat_start(const Region& region) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(region.dim());
  for (int i = 0; i < region.num_buses(); ++i) x[4 * i + 1] = 1.0;
  return x;
}

CentralSolution solve_centralized(const GridCase& gc, double gamma,
                                  const SolverTolerances& tol) {
  // one region spanning the whole case, no auxiliary buses
  PartitionSpec spec;
  spec.region_bus_sets.emplace_back();
  for (const auto& b : gc.buses) spec.region_bus_sets[0].push_back(b.id);
  PartitionedProblem pp = decompose(gc, spec, gamma);
  const Region& reg = pp.regions[0];
  RegionNlp nlp(reg, gamma);
  InteriorPointSolver solver(tol);
  NlpResult r = solver.solve(nlp, flat_start(reg));
  CentralSolution cs;
  cs.status = r.status;
  cs.iterations = r.iterations;
  cs.objective = r.objective;
  cs.kappa = r.kappa;
  cs.eta = r.eta;
  // region bus order is sorted by id; map back to case bus order
  cs.x = Eigen::VectorXd::Zero(4 * gc.num_buses());
  for (int b = 0; b < gc.num_buses(); ++b) {
    const int li = reg.local_bus_index(gc.buses[b].id);
    cs.x.segment<4>(4 * b) = r.x.segment<4>(4 * li);
  }
  return cs;
}

}  // namespace dopf
