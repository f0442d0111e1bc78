#include "dopf/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace dopf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAuxInjectionBound = 10.0;  // p.u., effectively free
}  // namespace

int Region::num_eq() const {
  return 2 * num_buses() + (reference_local_bus >= 0 ? 2 : 0) +
         static_cast<int>(limited_lines.size());
}

int Region::local_bus_index(int bus_id) const {
  for (int i = 0; i < num_buses(); ++i)
    if (buses[i].bus_id == bus_id) return i;
  return -1;
}

Eigen::VectorXd Region::lower() const {
  Eigen::VectorXd l(dim());
  for (int i = 0; i < num_buses(); ++i) {
    l[4 * i + 0] = -kInf;
    l[4 * i + 1] = buses[i].v_min;
    l[4 * i + 2] = buses[i].p_min;
    l[4 * i + 3] = buses[i].q_min;
  }
  for (const auto& ll : limited_lines) l[ll.slack_index] = 0.0;
  return l;
}

Eigen::VectorXd Region::upper() const {
  Eigen::VectorXd u(dim());
  for (int i = 0; i < num_buses(); ++i) {
    u[4 * i + 0] = kInf;
    u[4 * i + 1] = buses[i].v_max;
    u[4 * i + 2] = buses[i].p_max;
    u[4 * i + 3] = buses[i].q_max;
  }
  for (const auto& ll : limited_lines) u[ll.slack_index] = ll.limit * ll.limit;
  return u;
}

int PartitionedProblem::total_dim() const {
  int n = 0;
  for (const auto& r : regions) n += r.dim();
  return n;
}

int PartitionedProblem::total_core_dim() const {
  int n = 0;
  for (const auto& r : regions) n += r.core_dim();
  return n;
}

int PartitionedProblem::region_offset(int r) const {
  int off = 0;
  for (int i = 0; i < r; ++i) off += regions[i].dim();
  return off;
}

std::pair<int, int> PartitionedProblem::locate(int bus_id, int quantity) const {
  for (const auto& reg : regions) {
    const int li = reg.local_bus_index(bus_id);
    if (li >= 0) return {reg.index, 4 * li + quantity};
  }
  throw std::invalid_argument("bus " + std::to_string(bus_id) + " not in any region");
}

Eigen::VectorXd PartitionedProblem::consensus_residual(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(num_consensus_rows());
  for (size_t i = 0; i < regions.size(); ++i)
    r += consensus[i] * x.segment(region_offset(static_cast<int>(i)),
                                  regions[i].dim());
  return r;
}

Eigen::VectorXd PartitionedProblem::glue(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g(4 * grid.num_buses());
  for (int b = 0; b < grid.num_buses(); ++b) {
    const int id = grid.buses[b].id;
    for (int q = 0; q < 4; ++q) {
      auto [r, li] = locate(id, q);
      g[4 * b + q] = x[region_offset(r) + li];
    }
  }
  return g;
}

double PartitionedProblem::objective(const Eigen::VectorXd& x) const {
  double f = 0.0;
  for (const auto& reg : regions) {
    const int off = region_offset(reg.index);
    for (int i = 0; i < reg.num_buses(); ++i) {
      const auto& b = reg.buses[i];
      const double p = x[off + 4 * i + 2];
      const double q = x[off + 4 * i + 3];
      if (b.has_gen) f += b.c1 * p * p + b.c2 * p + b.c3;
      f += gamma * q * q;
    }
  }
  return f;
}

// Exact quadratic aggregation of several generators at one bus: the
// minimum-cost split of a total injection p over quadratics with c1 > 0 is
// itself quadratic in p, so three evaluations recover the coefficients.
// Individual generator bounds are folded into summed bounds.
LocalBus aggregate_generators(const Bus& bus, const std::vector<const Generator*>& gens) {
  LocalBus lb;
  lb.bus_id = bus.id;
  lb.p_demand = bus.p_demand;
  lb.q_demand = bus.q_demand;
  lb.v_min = bus.v_min;
  lb.v_max = bus.v_max;
  if (gens.empty()) return lb;  // p = q = 0 fixed

  lb.has_gen = true;
  for (const auto* g : gens) {
    if (g->c1 <= 0.0)
      throw std::invalid_argument("generator at bus " + std::to_string(bus.id) +
                                  " has non-positive quadratic cost coefficient");
    lb.p_min += g->p_min;
    lb.p_max += g->p_max;
    lb.q_min += g->q_min;
    lb.q_max += g->q_max;
  }
  if (gens.size() == 1) {
    lb.c1 = gens[0]->c1;
    lb.c2 = gens[0]->c2;
    lb.c3 = gens[0]->c3;
    return lb;
  }
  auto split_cost = [&gens](double p) {
    // stationary split: 2*c1_j*p_j + c2_j = nu for all j, sum p_j = p
    double inv = 0.0, shift = 0.0;
    for (const auto* g : gens) {
      inv += 1.0 / (2.0 * g->c1);
      shift += g->c2 / (2.0 * g->c1);
    }
    const double nu = (p + shift) / inv;
    double f = 0.0;
    for (const auto* g : gens) {
      const double pj = (nu - g->c2) / (2.0 * g->c1);
      f += g->c1 * pj * pj + g->c2 * pj + g->c3;
    }
    return f;
  };
  const double f0 = split_cost(0.0), fp = split_cost(1.0), fm = split_cost(-1.0);
  lb.c1 = 0.5 * (fp + fm - 2.0 * f0);
  lb.c2 = 0.5 * (fp - fm);
  lb.c3 = f0;
  return lb;
}

PartitionedProblem decompose(const GridCase& gc, const PartitionSpec& spec,
                             double gamma) {
  const int R = static_cast<int>(spec.region_bus_sets.size());
  if (R == 0) throw std::invalid_argument("partition spec has no regions");

  // bus id -> region, with disjointness/coverage checks
  std::map<int, int> bus_region;
  for (int r = 0; r < R; ++r) {
    if (spec.region_bus_sets[r].empty())
      throw std::invalid_argument("region " + std::to_string(r) + " has no bus");
    for (int id : spec.region_bus_sets[r]) {
      if (gc.bus_index(id) < 0)
        throw std::invalid_argument("partition references unknown bus " + std::to_string(id));
      if (!bus_region.emplace(id, r).second)
        throw std::invalid_argument("bus " + std::to_string(id) + " in two regions");
    }
  }
  if (static_cast<int>(bus_region.size()) != gc.num_buses())
    throw std::invalid_argument("partition does not cover all buses");

  PartitionedProblem pp;
  pp.grid = gc;
  pp.gamma = gamma;
  pp.regions.resize(R);

  // original buses, sorted by id within each region
  std::map<int, std::vector<const Generator*>> gens_at;
  for (const auto& g : gc.generators) gens_at[g.bus_id].push_back(&g);
  for (int r = 0; r < R; ++r) {
    auto ids = spec.region_bus_sets[r];
    std::sort(ids.begin(), ids.end());
    pp.regions[r].index = r;
    for (int id : ids) {
      const Bus& bus = gc.buses[gc.bus_index(id)];
      auto it = gens_at.find(id);
      LocalBus lb = aggregate_generators(
          bus, it == gens_at.end() ? std::vector<const Generator*>{} : it->second);
      pp.regions[r].buses.push_back(lb);
    }
  }

  // Auxiliary pair enumeration. Pairs are numbered region-block-wise: for
  // each region j = 1..R-1, cut branches to regions i < j are processed with
  // i descending, in case-file branch order within each (i, j) block. The
  // first member of the pair sits on the region-i side.
  int next_id = 0;
  for (const auto& b : gc.buses) next_id = std::max(next_id, b.id);
  ++next_id;

  struct CutHalf {
    const Branch* br;
    int orig_first, orig_second;  // first on the lower-region side
  };
  for (int j = 1; j < R; ++j) {
    for (int i = j - 1; i >= 0; --i) {
      for (const auto& br : gc.branches) {
        const int rf = bus_region.at(br.from_bus);
        const int rt = bus_region.at(br.to_bus);
        if (!((rf == i && rt == j) || (rf == j && rt == i))) continue;
        AuxiliaryPair ap;
        ap.region_first = i;
        ap.region_second = j;
        ap.orig_first = (rf == i) ? br.from_bus : br.to_bus;
        ap.orig_second = (rf == i) ? br.to_bus : br.from_bus;
        ap.aux_first = next_id++;
        ap.aux_second = next_id++;
        pp.pairs.push_back(ap);

        const Bus& adj_first = gc.buses[gc.bus_index(ap.orig_first)];
        const Bus& adj_second = gc.buses[gc.bus_index(ap.orig_second)];
        auto make_aux = [](int id, const Bus& adj) {
          LocalBus lb;
          lb.bus_id = id;
          lb.is_aux = true;
          lb.v_min = std::min(0.8, adj.v_min);
          lb.v_max = std::max(1.2, adj.v_max);
          lb.p_min = -kAuxInjectionBound;
          lb.p_max = kAuxInjectionBound;
          lb.q_min = -kAuxInjectionBound;
          lb.q_max = kAuxInjectionBound;
          return lb;
        };
        pp.regions[i].buses.push_back(make_aux(ap.aux_first, adj_first));
        pp.regions[j].buses.push_back(make_aux(ap.aux_second, adj_second));
      }
    }
  }

  // local admittance matrices and line limits
  const int ref_id = gc.reference_bus();
  for (int r = 0; r < R; ++r) {
    Region& reg = pp.regions[r];
    const int n = reg.num_buses();
    reg.Y.G = Eigen::MatrixXd::Zero(n, n);
    reg.Y.B = Eigen::MatrixXd::Zero(n, n);
    if (ref_id >= 0) reg.reference_local_bus = reg.local_bus_index(ref_id);
  }

  auto add_line = [](Region& reg, int a, int b, double g, double bsus) {
    reg.Y.G(a, b) -= g;
    reg.Y.B(a, b) -= bsus;
    reg.Y.G(b, a) -= g;
    reg.Y.B(b, a) -= bsus;
    reg.Y.G(a, a) += g;
    reg.Y.B(a, a) += bsus;
    reg.Y.G(b, b) += g;
    reg.Y.B(b, b) += bsus;
  };
  auto add_limit = [](Region& reg, int a, int b, double limit) {
    LimitedLine ll;
    ll.local_from = a;
    ll.local_to = b;
    ll.limit = limit;
    ll.slack_index = reg.core_dim() + static_cast<int>(reg.limited_lines.size());
    reg.limited_lines.push_back(ll);
  };

  // interior branches
  for (const auto& br : gc.branches) {
    const int rf = bus_region.at(br.from_bus);
    const int rt = bus_region.at(br.to_bus);
    if (rf != rt) continue;
    Region& reg = pp.regions[rf];
    const int a = reg.local_bus_index(br.from_bus);
    const int b = reg.local_bus_index(br.to_bus);
    add_line(reg, a, b, br.g, br.b);
    // Enforce the limit at both ends, matching the cut-branch case where each
    // region constrains the apparent power at its own end of the line.
    if (br.apparent_limit) {
      add_limit(reg, a, b, *br.apparent_limit);
      add_limit(reg, b, a, *br.apparent_limit);
    }
  }
  // cut branches: two half-lines with doubled admittance
  for (const auto& ap : pp.pairs) {
    const Branch* br = nullptr;
    for (const auto& cand : gc.branches) {
      if ((cand.from_bus == ap.orig_first && cand.to_bus == ap.orig_second) ||
          (cand.from_bus == ap.orig_second && cand.to_bus == ap.orig_first)) {
        br = &cand;
        break;
      }
    }
    // pairs were built from the branch list, so br is always found; parallel
    // cut branches produce one pair each and reuse the same admittance.
    Region& ri = pp.regions[ap.region_first];
    Region& rj = pp.regions[ap.region_second];
    const int m = ri.local_bus_index(ap.orig_first);
    const int k = ri.local_bus_index(ap.aux_first);
    const int nn = rj.local_bus_index(ap.orig_second);
    const int l = rj.local_bus_index(ap.aux_second);
    add_line(ri, m, k, 2.0 * br->g, 2.0 * br->b);
    add_line(rj, nn, l, 2.0 * br->g, 2.0 * br->b);
    if (br->apparent_limit) {
      add_limit(ri, m, k, *br->apparent_limit);
      add_limit(rj, nn, l, *br->apparent_limit);
    }
  }

  // fix slack indices now that all limits are known (core_dim was final above,
  // but limits were appended in two passes; re-normalize for determinism)
  for (auto& reg : pp.regions) {
    int s = reg.core_dim();
    for (auto& ll : reg.limited_lines) ll.slack_index = s++;
  }

  pp.consensus = build_consensus_constraints(pp);
  return pp;
}

std::vector<ConsensusBlock> build_consensus_constraints(const PartitionedProblem& pp) {
  const int rows = pp.num_consensus_rows();
  std::vector<std::vector<Eigen::Triplet<double>>> trip(pp.regions.size());
  for (size_t p = 0; p < pp.pairs.size(); ++p) {
    const auto& ap = pp.pairs[p];
    const int ri = ap.region_first;
    const int rj = ap.region_second;
    const int k = pp.regions[ri].local_bus_index(ap.aux_first);
    const int l = pp.regions[rj].local_bus_index(ap.aux_second);
    const int r0 = 4 * static_cast<int>(p);
    // theta_k = theta_l, v_k = v_l
    trip[ri].emplace_back(r0 + 0, 4 * k + 0, 1.0);
    trip[rj].emplace_back(r0 + 0, 4 * l + 0, -1.0);
    trip[ri].emplace_back(r0 + 1, 4 * k + 1, 1.0);
    trip[rj].emplace_back(r0 + 1, 4 * l + 1, -1.0);
    // p_k = -p_l, q_k = -q_l
    trip[ri].emplace_back(r0 + 2, 4 * k + 2, 1.0);
    trip[rj].emplace_back(r0 + 2, 4 * l + 2, 1.0);
    trip[ri].emplace_back(r0 + 3, 4 * k + 3, 1.0);
    trip[rj].emplace_back(r0 + 3, 4 * l + 3, 1.0);
  }
  std::vector<ConsensusBlock> blocks;
  for (size_t r = 0; r < pp.regions.size(); ++r) {
    ConsensusBlock A(rows, pp.regions[r].dim());
    A.setFromTriplets(trip[r].begin(), trip[r].end());
    blocks.push_back(std::move(A));
  }
  return blocks;
}

namespace {
std::vector<int> range_set(int a, int b) {
  std::vector<int> v(b - a + 1);
  std::iota(v.begin(), v.end(), a);
  return v;
}
std::vector<int> join(std::initializer_list<std::vector<int>> parts) {
  std::vector<int> v;
  for (const auto& p : parts) v.insert(v.end(), p.begin(), p.end());
  return v;
}
}  // namespace

PartitionSpec builtin_partition(const std::string& case_name) {
  PartitionSpec s;
  if (case_name == "5" || case_name == "5lim") {
    s.region_bus_sets = {{1, 5}, {2, 3}, {4}};
  } else if (case_name == "30") {
    s.region_bus_sets = {join({range_set(1, 8), {28}}),
                         {9, 10, 11, 17, 21, 22},
                         {24, 25, 26, 27, 29, 30},
                         join({range_set(12, 16), range_set(18, 20), {23}})};
  } else if (case_name == "57") {
    s.region_bus_sets = {join({{24, 25, 26}, range_set(30, 33)}),
                         {10, 12, 16, 17, 51},
                         join({{8, 9, 11}, range_set(41, 43), range_set(55, 57)}),
                         join({{13, 14}, range_set(46, 50)}),
                         {34, 35, 36, 37, 39, 40},
                         join({{7}, range_set(27, 29), range_set(52, 54)}),
                         join({range_set(19, 23), {38, 44}}),
                         join({range_set(1, 6), {15, 18, 45}})};
  } else if (case_name == "118") {
    // Region 4 is listed as "{82, 112}" in the source table; read as 82-112.
    s.region_bus_sets = {join({range_set(1, 32), range_set(113, 115), {117}}),
                         range_set(33, 67),
                         join({range_set(68, 81), {116, 118}}),
                         range_set(82, 112)};
  } else if (case_name == "300") {
    s.region_bus_sets = {range_set(1, 100), range_set(101, 200), range_set(201, 300)};
  } else {
    throw std::invalid_argument("no builtin partition for case '" + case_name + "'");
  }
  return s;
}

PartitionSpec parse_partition_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  if (!j.is_array()) throw ParseError("partition must be a list of integer lists");
  PartitionSpec s;
  for (const auto& region : j) {
    if (!region.is_array()) throw ParseError("partition must be a list of integer lists");
    std::vector<int> ids;
    for (const auto& id : region) ids.push_back(id.get<int>());
    s.region_bus_sets.push_back(std::move(ids));
  }
  return s;
}

}  // namespace dopf
