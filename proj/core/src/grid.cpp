#include "dopf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dopf {

int GridCase::bus_index(int bus_id) const {
  for (int i = 0; i < static_cast<int>(buses.size()); ++i)
    if (buses[i].id == bus_id) return i;
  return -1;
}

int GridCase::reference_bus() const {
  for (const auto& b : buses)
    if (b.is_reference) return b.id;
  return -1;
}

LineFlow line_flow(double theta_k, double v_k, double theta_l, double v_l,
                   double G_kl, double B_kl) {
  const double c = std::cos(theta_k - theta_l);
  const double s = std::sin(theta_k - theta_l);
  LineFlow f;
  f.p = -v_k * v_k * G_kl + v_k * v_l * (G_kl * c + B_kl * s);
  f.q = v_k * v_k * B_kl - v_k * v_l * (B_kl * c - G_kl * s);
  return f;
}

AdmittanceMatrix build_admittance(const GridCase& gc) {
  const int n = gc.num_buses();
  AdmittanceMatrix Y;
  Y.G = Eigen::MatrixXd::Zero(n, n);
  Y.B = Eigen::MatrixXd::Zero(n, n);
  for (const auto& br : gc.branches) {
    const int k = gc.bus_index(br.from_bus);
    const int l = gc.bus_index(br.to_bus);
    if (k < 0 || l < 0)
      throw std::invalid_argument("branch references unknown bus " +
                                  std::to_string(k < 0 ? br.from_bus : br.to_bus));
    Y.G(k, l) -= br.g;
    Y.B(k, l) -= br.b;
    Y.G(l, k) -= br.g;
    Y.B(l, k) -= br.b;
    Y.G(k, k) += br.g;
    Y.B(k, k) += br.b;
    Y.G(l, l) += br.g;
    Y.B(l, l) += br.b;
  }
  return Y;
}

std::vector<std::string> validate_case(const GridCase& gc) {
  std::vector<std::string> out;
  int n_ref = 0;
  for (const auto& b : gc.buses) {
    if (b.is_reference) ++n_ref;
    if (b.v_min > b.v_max)
      out.push_back("bus " + std::to_string(b.id) + ": v_min > v_max");
    if (b.v_min <= 0.0)
      out.push_back("bus " + std::to_string(b.id) + ": v_min must be positive");
  }
  if (n_ref == 0) out.push_back("no reference bus");
  if (n_ref > 1) out.push_back("multiple reference buses (" + std::to_string(n_ref) + ")");

  for (const auto& g : gc.generators) {
    if (gc.bus_index(g.bus_id) < 0)
      out.push_back("generator references unknown bus " + std::to_string(g.bus_id));
    if (g.p_min > g.p_max)
      out.push_back("generator at bus " + std::to_string(g.bus_id) + ": p_min > p_max");
  }

  // connectivity via BFS over branches
  if (!gc.buses.empty()) {
    std::map<int, std::vector<int>> adj;
    for (const auto& br : gc.branches) {
      adj[br.from_bus].push_back(br.to_bus);
      adj[br.to_bus].push_back(br.from_bus);
    }
    std::set<int> seen;
    std::queue<int> q;
    q.push(gc.buses.front().id);
    seen.insert(gc.buses.front().id);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (seen.insert(v).second) q.push(v);
    }
    for (const auto& b : gc.buses)
      if (!seen.count(b.id))
        out.push_back("bus " + std::to_string(b.id) + " not connected to bus " +
                      std::to_string(gc.buses.front().id));
  }
  return out;
}

// ---------------------------------------------------------------------------
// MATPOWER subset parser
// ---------------------------------------------------------------------------

namespace {

struct MpMatrix {
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;  // source line of each row
};

std::string strip_comment(const std::string& line) {
  auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

// Reads rows of numbers until the closing "];". `line_no` tracks position.
MpMatrix read_matrix(std::istringstream& in, int& line_no, const std::string& name) {
  MpMatrix m;
  std::string line;
  std::string pending;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = strip_comment(line);
    auto end = body.find(']');
    bool closing = end != std::string::npos;
    if (closing) body = body.substr(0, end);
    // split on ';' so several rows may share a line
    std::string chunk;
    std::istringstream row_stream(body);
    while (std::getline(row_stream, chunk, ';')) {
      std::istringstream num(chunk);
      std::vector<double> vals;
      double v;
      while (num >> v) vals.push_back(v);
      if (!num.eof()) {
        std::string bad;
        num.clear();
        num >> bad;
        throw ParseError("unexpected token '" + bad + "' in " + name, line_no);
      }
      if (!vals.empty()) {
        m.rows.push_back(std::move(vals));
        m.row_lines.push_back(line_no);
      }
    }
    if (closing) return m;
  }
  throw ParseError("matrix " + name + " not terminated with '];'", line_no);
}

double mp_field(const std::vector<double>& row, size_t idx, const std::string& what,
                int line_no) {
  if (idx >= row.size())
    throw ParseError("missing column " + std::to_string(idx + 1) + " (" + what + ")",
                     line_no);
  return row[idx];
}

}  // namespace

GridCase parse_matpower_case(const std::string& text) {
  GridCase gc;
  std::optional<MpMatrix> bus_m, gen_m, branch_m, gencost_m;
  std::optional<double> base;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = strip_comment(line);
    auto first = body.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    body = body.substr(first);
    if (body.rfind("function", 0) == 0) {
      auto eq = body.find('=');
      if (eq != std::string::npos) {
        std::istringstream name_in(body.substr(eq + 1));
        name_in >> gc.name;
      }
      continue;
    }
    if (body.rfind("mpc.version", 0) == 0) continue;
    if (body.rfind("mpc.baseMVA", 0) == 0) {
      auto eq = body.find('=');
      if (eq == std::string::npos) throw ParseError("expected '=' after mpc.baseMVA", line_no);
      base = std::strtod(body.c_str() + eq + 1, nullptr);
      continue;
    }
    auto parse_header = [&](const char* key) {
      if (body.rfind(key, 0) != 0) return false;
      if (body.find('[') == std::string::npos)
        throw ParseError(std::string("expected '[' after ") + key, line_no);
      return true;
    };
    if (parse_header("mpc.bus")) {
      bus_m = read_matrix(in, line_no, "mpc.bus");
    } else if (parse_header("mpc.gencost")) {
      gencost_m = read_matrix(in, line_no, "mpc.gencost");
    } else if (parse_header("mpc.gen")) {
      gen_m = read_matrix(in, line_no, "mpc.gen");
    } else if (parse_header("mpc.branch")) {
      branch_m = read_matrix(in, line_no, "mpc.branch");
    } else {
      throw ParseError("unrecognized statement '" + body.substr(0, body.find_first_of(" =")) + "'",
                       line_no);
    }
  }

  if (!bus_m) throw ParseError("missing mpc.bus");
  if (!gen_m) throw ParseError("missing mpc.gen");
  if (!branch_m) throw ParseError("missing mpc.branch");
  if (!gencost_m) throw ParseError("missing mpc.gencost");
  gc.base_mva = base.value_or(100.0);
  const double S = gc.base_mva;

  for (size_t r = 0; r < bus_m->rows.size(); ++r) {
    const auto& row = bus_m->rows[r];
    const int ln = bus_m->row_lines[r];
    Bus b;
    b.id = static_cast<int>(mp_field(row, 0, "bus id", ln));
    const int type = static_cast<int>(mp_field(row, 1, "bus type", ln));
    b.p_demand = mp_field(row, 2, "Pd", ln) / S;
    b.q_demand = mp_field(row, 3, "Qd", ln) / S;
    if (mp_field(row, 4, "Gs", ln) != 0.0 || mp_field(row, 5, "Bs", ln) != 0.0)
      throw ParseError("bus " + std::to_string(b.id) +
                           ": shunt columns Gs/Bs must be zero (shunt-free model)",
                       ln);
    b.v_max = mp_field(row, 11, "Vmax", ln);
    b.v_min = mp_field(row, 12, "Vmin", ln);
    b.is_reference = (type == 3);
    gc.buses.push_back(b);
  }

  for (size_t r = 0; r < gen_m->rows.size(); ++r) {
    const auto& row = gen_m->rows[r];
    const int ln = gen_m->row_lines[r];
    Generator g;
    g.bus_id = static_cast<int>(mp_field(row, 0, "gen bus", ln));
    if (gc.bus_index(g.bus_id) < 0)
      throw ParseError("unknown bus " + std::to_string(g.bus_id) + " in mpc.gen", ln);
    g.q_max = mp_field(row, 3, "Qmax", ln) / S;
    g.q_min = mp_field(row, 4, "Qmin", ln) / S;
    g.p_max = mp_field(row, 8, "Pmax", ln) / S;
    g.p_min = mp_field(row, 9, "Pmin", ln) / S;
    gc.generators.push_back(g);
  }

  if (gencost_m->rows.size() != gc.generators.size())
    throw ParseError("mpc.gencost has " + std::to_string(gencost_m->rows.size()) +
                     " rows but mpc.gen has " + std::to_string(gc.generators.size()));
  for (size_t r = 0; r < gencost_m->rows.size(); ++r) {
    const auto& row = gencost_m->rows[r];
    const int ln = gencost_m->row_lines[r];
    const int model = static_cast<int>(mp_field(row, 0, "cost model", ln));
    const int ncost = static_cast<int>(mp_field(row, 3, "ncost", ln));
    if (model != 2 || ncost > 3)
      throw ParseError("only quadratic polynomial cost (model 2, ncost <= 3) supported", ln);
    // MATPOWER polynomial coefficients are per MW; convert to p.u.
    double a = 0, bq = 0, c = 0;
    if (ncost == 3) {
      a = mp_field(row, 4, "c2", ln);
      bq = mp_field(row, 5, "c1", ln);
      c = mp_field(row, 6, "c0", ln);
    } else if (ncost == 2) {
      bq = mp_field(row, 4, "c1", ln);
      c = mp_field(row, 5, "c0", ln);
    } else if (ncost == 1) {
      c = mp_field(row, 4, "c0", ln);
    }
    gc.generators[r].c1 = a * S * S;
    gc.generators[r].c2 = bq * S;
    gc.generators[r].c3 = c;
  }

  for (size_t r = 0; r < branch_m->rows.size(); ++r) {
    const auto& row = branch_m->rows[r];
    const int ln = branch_m->row_lines[r];
    Branch br;
    br.from_bus = static_cast<int>(mp_field(row, 0, "fbus", ln));
    br.to_bus = static_cast<int>(mp_field(row, 1, "tbus", ln));
    if (gc.bus_index(br.from_bus) < 0)
      throw ParseError("unknown bus " + std::to_string(br.from_bus) + " in mpc.branch", ln);
    if (gc.bus_index(br.to_bus) < 0)
      throw ParseError("unknown bus " + std::to_string(br.to_bus) + " in mpc.branch", ln);
    if (br.from_bus == br.to_bus)
      throw ParseError("self-loop branch at bus " + std::to_string(br.from_bus), ln);
    const double res = mp_field(row, 2, "r", ln);
    const double x = mp_field(row, 3, "x", ln);
    const double chg = mp_field(row, 4, "b", ln);
    if (chg != 0.0)
      throw ParseError("charging susceptance must be zero (shunt-free model)", ln);
    if (row.size() > 8 && row[8] != 0.0 && row[8] != 1.0)
      throw ParseError("transformer tap ratios not supported", ln);
    if (row.size() > 9 && row[9] != 0.0)
      throw ParseError("phase shifters not supported", ln);
    const double z2 = res * res + x * x;
    if (z2 <= 0.0) throw ParseError("branch with zero impedance", ln);
    br.g = res / z2;
    br.b = -x / z2;
    const double rate_a = row.size() > 5 ? row[5] : 0.0;
    if (rate_a > 0.0) br.apparent_limit = rate_a / S;
    gc.branches.push_back(br);
  }

  return gc;
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

GridCase parse_json_case(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  GridCase gc;
  try {
    gc.name = j.value("name", "");
    gc.base_mva = j.value("base_mva", 100.0);
    for (const auto& bj : j.at("buses")) {
      Bus b;
      b.id = bj.at("id").get<int>();
      b.v_min = bj.at("v_min").get<double>();
      b.v_max = bj.at("v_max").get<double>();
      b.p_demand = bj.value("p_demand", 0.0);
      b.q_demand = bj.value("q_demand", 0.0);
      b.is_reference = bj.value("is_reference", false);
      gc.buses.push_back(b);
    }
    for (const auto& gj : j.at("generators")) {
      Generator g;
      g.bus_id = gj.at("bus_id").get<int>();
      if (gc.bus_index(g.bus_id) < 0)
        throw ParseError("unknown bus " + std::to_string(g.bus_id) + " in generators");
      g.p_min = gj.at("p_min").get<double>();
      g.p_max = gj.at("p_max").get<double>();
      g.q_min = gj.at("q_min").get<double>();
      g.q_max = gj.at("q_max").get<double>();
      g.c1 = gj.at("c1").get<double>();
      g.c2 = gj.value("c2", 0.0);
      g.c3 = gj.value("c3", 0.0);
      gc.generators.push_back(g);
    }
    for (const auto& bj : j.at("branches")) {
      Branch br;
      br.from_bus = bj.at("from_bus").get<int>();
      br.to_bus = bj.at("to_bus").get<int>();
      if (gc.bus_index(br.from_bus) < 0 || gc.bus_index(br.to_bus) < 0)
        throw ParseError("unknown bus in branches");
      br.g = bj.at("g").get<double>();
      br.b = bj.at("b").get<double>();
      if (bj.contains("apparent_limit") && !bj["apparent_limit"].is_null())
        br.apparent_limit = bj["apparent_limit"].get<double>();
      gc.branches.push_back(br);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  return gc;
}

std::string case_to_json(const GridCase& gc) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["name"] = gc.name;
  j["base_mva"] = gc.base_mva;
  j["buses"] = nlohmann::json::array();
  for (const auto& b : gc.buses) {
    j["buses"].push_back({{"id", b.id},
                          {"v_min", b.v_min},
                          {"v_max", b.v_max},
                          {"p_demand", b.p_demand},
                          {"q_demand", b.q_demand},
                          {"is_reference", b.is_reference}});
  }
  j["generators"] = nlohmann::json::array();
  for (const auto& g : gc.generators) {
    j["generators"].push_back({{"bus_id", g.bus_id},
                               {"p_min", g.p_min},
                               {"p_max", g.p_max},
                               {"q_min", g.q_min},
                               {"q_max", g.q_max},
                               {"c1", g.c1},
                               {"c2", g.c2},
                               {"c3", g.c3}});
  }
  j["branches"] = nlohmann::json::array();
  for (const auto& br : gc.branches) {
    nlohmann::json bj = {{"from_bus", br.from_bus},
                         {"to_bus", br.to_bus},
                         {"g", br.g},
                         {"b", br.b}};
    if (br.apparent_limit) bj["apparent_limit"] = *br.apparent_limit;
    j["branches"].push_back(bj);
  }
  return j.dump(2);
}

}  // namespace dopf
