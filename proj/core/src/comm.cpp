#include "dopf/comm.hpp"

#include <cmath>
#include <stdexcept>

namespace dopf {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::admm: return "admm";
    case Algorithm::aladin: return "aladin";
    case Algorithm::aladin_bfgs: return "aladin-bfgs";
    case Algorithm::central: return "central";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "admm") return Algorithm::admm;
  if (s == "aladin") return Algorithm::aladin;
  if (s == "aladin-bfgs" || s == "aladin_bfgs") return Algorithm::aladin_bfgs;
  if (s == "central") return Algorithm::central;
  throw std::invalid_argument("unknown algorithm: " + s);
}

long worst_case_forward(const std::vector<int>& n_list, Algorithm alg) {
  long total = 0;
  for (int n : n_list) {
    const long ln = n;
    switch (alg) {
      case Algorithm::admm: total += ln; break;
      case Algorithm::aladin: total += ln * (2 * ln + 3) / 2; break;
      case Algorithm::aladin_bfgs: total += ln * (ln + 4) / 2; break;
      case Algorithm::central: break;
    }
  }
  return total;
}

long worst_case_backward(const std::vector<int>& n_list, Algorithm alg) {
  long total = 0;
  for (int n : n_list) {
    switch (alg) {
      case Algorithm::admm: total += n; break;
      case Algorithm::aladin:
      case Algorithm::aladin_bfgs: total += 2L * n; break;
      case Algorithm::central: break;
    }
  }
  return total;
}

long worst_case_binaries(const std::vector<int>& n_list) {
  long total = 0;
  for (int n : n_list) total += 3L * n / 4;
  return total;
}

long count_nonzero_payload(const Eigen::VectorXd& g, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& C, int core_dim, int core_rows) {
  if (core_dim > g.size() || core_dim > B.rows() || core_dim > B.cols() ||
      core_dim > C.cols() || core_rows > C.rows()) {
    throw std::invalid_argument("count_nonzero_payload: core block exceeds matrix sizes");
  }
  long count = 0;
  for (int j = 0; j < core_dim; ++j) {
    if (g[j] != 0.0) ++count;
  }
  for (int j = 0; j < core_dim; ++j) {
    for (int i = 0; i <= j; ++i) {
      if (B(i, j) != 0.0) ++count;
    }
  }
  for (int i = 0; i < core_rows; ++i) {
    for (int j = 0; j < core_dim; ++j) {
      if (C(i, j) != 0.0) ++count;
    }
  }
  return count;
}

double worst_case_time(int iters, double t_nlp, double t_qp, Algorithm alg) {
  switch (alg) {
    case Algorithm::admm: return iters * t_nlp;
    case Algorithm::aladin:
    case Algorithm::aladin_bfgs: return iters * (t_nlp + t_qp);
    case Algorithm::central: return t_nlp;
  }
  return 0.0;
}

}  // namespace dopf
