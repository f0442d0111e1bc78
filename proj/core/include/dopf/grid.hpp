#ifndef DOPF_GRID_HPP
#define DOPF_GRID_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dopf {

/// Thrown by the case parsers; carries a 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Bus {
  int id = 0;
  double v_min = 0.9;
  double v_max = 1.1;
  double p_demand = 0.0;  // p.u.
  double q_demand = 0.0;  // p.u.
  bool is_reference = false;
};

struct Generator {
  int bus_id = 0;
  double p_min = 0.0, p_max = 0.0;  // p.u.
  double q_min = 0.0, q_max = 0.0;  // p.u.
  // Quadratic cost c1*p^2 + c2*p + c3 with p in p.u.; units $/hr.
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  // Series admittance y = g + jb in p.u. (no charging, no taps).
  double g = 0.0;
  double b = 0.0;
  std::optional<double> apparent_limit;  // |s_bar| in p.u.
};

struct GridCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;

  int num_buses() const { return static_cast<int>(buses.size()); }
  /// Index of the bus with the given external id, or -1.
  int bus_index(int bus_id) const;
  int reference_bus() const;  // external id; -1 if none
};

/// Dense bus admittance matrix Y = G + jB, kept as separate real parts.
struct AdmittanceMatrix {
  Eigen::MatrixXd G;
  Eigen::MatrixXd B;
  int size() const { return static_cast<int>(G.rows()); }
};

/// Parses the restricted MATPOWER .m subset (see docs/matpower-subset.md).
/// Shunt columns, charging susceptance, taps and phase shifts must be zero.
GridCase parse_matpower_case(const std::string& text);

/// Parses/serializes the native JSON case schema (docs/case-schema.md).
GridCase parse_json_case(const std::string& text);
std::string case_to_json(const GridCase& gc);

/// Y_kl = -y_kl off-diagonal, Y_kk = sum of incident line admittances.
/// Parallel branches between the same pair of buses are summed.
AdmittanceMatrix build_admittance(const GridCase& gc);

struct LineFlow {
  double p = 0.0;
  double q = 0.0;
};

/// Directed flow from bus k into the line toward bus l, given the
/// off-diagonal admittance entries G_kl, B_kl of Y.
LineFlow line_flow(double theta_k, double v_k, double theta_l, double v_l,
                   double G_kl, double B_kl);

/// Non-fatal structural diagnostics (connectivity, reference bus, bounds).
std::vector<std::string> validate_case(const GridCase& gc);

}  // namespace dopf

#endif  // DOPF_GRID_HPP
