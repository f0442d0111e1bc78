#ifndef DOPF_CASES_HPP
#define DOPF_CASES_HPP

#include <string>
#include <vector>

#include "dopf/aladin.hpp"
#include "dopf/grid.hpp"

namespace dopf {

bool is_builtin_case(const std::string& name);
std::vector<std::string> builtin_case_names();

/// Raw file text of a bundled case ("5", "5lim", "30", "57", "118", "300").
const std::string& builtin_case_text(const std::string& name);

GridCase load_builtin_case(const std::string& name);

/// Published per-case parameters: rho0 = 1e2 and mu0 = 1e3, mu_max = 2e6,
/// r_mu = 2 everywhere; rho_max = 1e6 with r_rho = 1.5 (5/5lim/30/57),
/// r_rho = 1.1 (118); rho_max = 1e3 with r_rho = 0.8 (300);
/// gamma = 0 (5/5lim/300), gamma = 10 (30/57/118).
AladinConfig paper_preset(const std::string& name);

/// The gamma regularization weight of the preset, needed at decompose time.
double preset_gamma(const std::string& name);

}  // namespace dopf

#endif  // DOPF_CASES_HPP
