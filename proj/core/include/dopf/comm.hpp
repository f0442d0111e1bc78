#ifndef DOPF_COMM_HPP
#define DOPF_COMM_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dopf {

enum class Algorithm { admm, aladin, aladin_bfgs, central };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// Worst-case region->coordinator float counts per iteration.
/// n_i = 4*N_i (slack variables excluded by convention):
///   admm:         sum n_i
///   aladin:       sum n_i (2 n_i + 3) / 2
///   aladin_bfgs:  sum n_i (n_i + 4) / 2
long worst_case_forward(const std::vector<int>& n_list, Algorithm alg);

/// Coordinator->region: sum 2 n_i for the ALADIN variants, sum n_i for ADMM.
long worst_case_backward(const std::vector<int>& n_list, Algorithm alg);

/// Active-set flags, in binaries: sum 3 n_i / 4.
long worst_case_binaries(const std::vector<int>& n_list);

/// Structurally nonzero floats of one region's ALADIN sensitivity message,
/// restricted to the slack-free core block: gradient entries, upper triangle
/// of B, and the power-flow rows of C. Entries tied to line-limit slacks and
/// the reference anchors are accounted by the caller as a separate excess.
long count_nonzero_payload(const Eigen::VectorXd& g, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& C, int core_dim, int core_rows);

/// iters * T_nlp for ADMM, iters * (T_nlp + T_qp) for the ALADIN variants.
double worst_case_time(int iters, double t_nlp, double t_qp, Algorithm alg);

struct CommReport {
  std::vector<int> n_list;       // 4*N_i per region
  long nfw_bound = 0;
  long nbw_bound = 0;
  long binaries_bound = 0;
  long nfw_actual_max = 0;       // max observed core payload over iterations
  long nbw_actual_max = 0;
  long slack_extra_max = 0;      // excess payload caused by slack variables
  long fw_total = 0;             // cumulative over the run
  long bw_total = 0;
};

}  // namespace dopf

#endif  // DOPF_COMM_HPP
