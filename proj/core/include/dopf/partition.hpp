#ifndef DOPF_PARTITION_HPP
#define DOPF_PARTITION_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dopf/grid.hpp"

namespace dopf {

/// Disjoint bus-id sets covering the whole case.
struct PartitionSpec {
  std::vector<std::vector<int>> region_bus_sets;
};

/// An auxiliary bus pair inserted at the midpoint of a cut branch.
/// `aux_first` lives in `region_first`, attached to original bus
/// `orig_first`; likewise for the second member.
struct AuxiliaryPair {
  int aux_first = 0;
  int aux_second = 0;
  int region_first = 0;
  int region_second = 0;
  int orig_first = 0;   // endpoint of the cut branch on the first side
  int orig_second = 0;  // endpoint on the second side
};

/// Per-bus data of a region in local variable order (theta, v, p, q).
struct LocalBus {
  int bus_id = 0;
  bool is_aux = false;
  double p_demand = 0.0, q_demand = 0.0;
  // Box bounds of the four nodal variables. theta is unbounded except at
  // the reference bus. Non-generator original buses have p = q = 0 fixed.
  double v_min = 0.9, v_max = 1.1;
  double p_min = 0.0, p_max = 0.0;
  double q_min = 0.0, q_max = 0.0;
  bool has_gen = false;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;  // aggregated quadratic cost
};

/// A branch with an apparent-power limit, local to one region. The flow is
/// measured from `local_from` toward `local_to`; cut branches contribute one
/// half-line per region, measured from the original bus toward the auxiliary
/// bus with the full limit.
struct LimitedLine {
  int local_from = 0;
  int local_to = 0;
  double limit = 0.0;     // |s_bar|
  int slack_index = 0;    // index into x_i, after the 4*N_i bus variables
};

struct Region {
  int index = 0;
  std::vector<LocalBus> buses;  // enlarged set N_i, order fixed
  AdmittanceMatrix Y;           // local, shunt-free
  std::vector<LimitedLine> limited_lines;
  int reference_local_bus = -1;  // local index of the reference bus, or -1

  int num_buses() const { return static_cast<int>(buses.size()); }
  /// 4*N_i: the bus-variable block used by consensus and comm accounting.
  int core_dim() const { return 4 * num_buses(); }
  /// Full local dimension including line-limit slacks.
  int dim() const { return core_dim() + static_cast<int>(limited_lines.size()); }
  int num_eq() const;  // power-flow rows + reference rows + slack equalities
  int local_bus_index(int bus_id) const;

  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
};

/// Block A_i of the consensus constraint sum_i A_i x_i = 0.
using ConsensusBlock = Eigen::SparseMatrix<double>;

struct PartitionedProblem {
  GridCase grid;
  std::vector<Region> regions;
  std::vector<AuxiliaryPair> pairs;
  std::vector<ConsensusBlock> consensus;  // one block per region, 4*|A| rows
  double gamma = 0.0;

  int num_consensus_rows() const { return 4 * static_cast<int>(pairs.size()); }
  int total_dim() const;
  int total_core_dim() const;

  /// Offset of region r's block in the stacked variable vector.
  int region_offset(int r) const;

  /// Coordinates of bus variable `q` (0=theta,1=v,2=p,3=q) of `bus_id`.
  /// Returns (region, local index within x_i).
  std::pair<int, int> locate(int bus_id, int quantity) const;

  /// consensus violation vector sum_i A_i x_i for a stacked x.
  Eigen::VectorXd consensus_residual(const Eigen::VectorXd& x_stacked) const;

  /// Collapse a stacked distributed point onto the original buses:
  /// 4 values (theta, v, p, q) per bus of the undecomposed case.
  Eigen::VectorXd glue(const Eigen::VectorXd& x_stacked) const;

  /// Objective sum_i f_i (including the gamma regularization).
  double objective(const Eigen::VectorXd& x_stacked) const;
};

/// Aggregated bounds and the exact quadratic cost (infimal convolution) of
/// the generators at one bus; requires c1 > 0 on every generator.
LocalBus aggregate_generators(const Bus& bus, const std::vector<const Generator*>& gens);

/// Splits the case along `spec`, inserting auxiliary bus pairs with doubled
/// admittance on every cut branch.
PartitionedProblem decompose(const GridCase& gc, const PartitionSpec& spec,
                             double gamma);

/// The affine consensus blocks: 4 rows per auxiliary pair, (+1,-1) for
/// theta and v, (+1,+1) for p and q.
std::vector<ConsensusBlock> build_consensus_constraints(const PartitionedProblem& pp);

/// Published partitions for the bundled test cases ("5", "30", "57", "118", "300").
PartitionSpec builtin_partition(const std::string& case_name);

PartitionSpec parse_partition_json(const std::string& text);

}  // namespace dopf

#endif  // DOPF_PARTITION_HPP
