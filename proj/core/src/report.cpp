#include "dopf/report.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dopf {

namespace {

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::failed: return "failed";
  }
  return "unknown";
}

void write_iterations_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "k,consensus_inf,dist_to_opt_inf,dual_res_inf,subopt,rho,mu,fw_floats,bw_floats\n";
  for (const IterationRecord& r : report.records) {
    out << r.k << ',' << csv_num(r.consensus_inf) << ',' << csv_num(r.dist_to_opt_inf)
        << ',' << csv_num(r.dual_res_inf) << ',' << csv_num(r.subopt) << ','
        << csv_num(r.rho) << ',' << csv_num(r.mu) << ',' << r.fw_floats << ','
        << r.bw_floats << '\n';
  }
}

nlohmann::json summary_json(const ConvergenceReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["algorithm"] = to_string(report.algorithm);
  j["case"] = report.case_name;
  j["status"] = to_string(report.status);
  j["iterations"] = report.iterations;
  j["objective"] = report.objective;
  j["final_consensus_inf"] = report.final_consensus_inf;
  j["t_local_hat_s"] = report.t_local_hat;
  j["t_coord_hat_s"] = report.t_coord_hat;
  j["worst_case_time_s"] =
      worst_case_time(report.iterations, report.t_local_hat, report.t_coord_hat,
                      report.algorithm);
  nlohmann::json comm;
  comm["n_list"] = report.comm.n_list;
  comm["nfw_bound"] = report.comm.nfw_bound;
  comm["nbw_bound"] = report.comm.nbw_bound;
  comm["binaries_bound"] = report.comm.binaries_bound;
  comm["nfw_actual_max"] = report.comm.nfw_actual_max;
  comm["nbw_actual_max"] = report.comm.nbw_actual_max;
  comm["slack_extra_max"] = report.comm.slack_extra_max;
  comm["fw_total"] = report.comm.fw_total;
  comm["bw_total"] = report.comm.bw_total;
  j["comm"] = comm;
  if (!report.error.empty()) j["error"] = report.error;

  static const char* required[] = {"schema_version", "algorithm", "case",   "status",
                                   "iterations",     "objective", "comm"};
  for (const char* key : required) {
    if (!j.contains(key)) throw std::logic_error(std::string("summary missing field ") + key);
  }
  return j;
}

nlohmann::json solution_json(const ConvergenceReport& report,
                             const std::vector<std::string>& bus_labels,
                             const std::vector<double>& theta,
                             const std::vector<double>& v,
                             const std::vector<double>& p,
                             const std::vector<double>& q) {
  const std::size_t n = bus_labels.size();
  if (theta.size() != n || v.size() != n || p.size() != n || q.size() != n) {
    throw std::invalid_argument("solution_json: inconsistent column lengths");
  }
  nlohmann::json j;
  j["schema_version"] = 1;
  j["algorithm"] = to_string(report.algorithm);
  j["case"] = report.case_name;
  j["objective"] = report.objective;
  nlohmann::json buses = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    buses.push_back({{"bus", bus_labels[i]},
                     {"theta", theta[i]},
                     {"v", v[i]},
                     {"p", p[i]},
                     {"q", q[i]}});
  }
  j["buses"] = buses;
  return j;
}

}  // namespace dopf
