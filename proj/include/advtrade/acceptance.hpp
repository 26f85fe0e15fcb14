#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace advtrade {

/// Root finder for the characteristic equation, (a, beta, tau_g) -> tau.
using TauSolver = std::function<double(double, double, double)>;

struct AcceptanceOptions {
  /// Monte Carlo seed counts divided by 5, tolerances doubled.
  bool quick = false;
  unsigned workers = 0;
  std::uint64_t master_seed = 20240611;
  /// Solver under test for the tau-star criterion; defaults to tau_star.
  TauSolver tau_solver;
  /// Criteria to run (1..10); empty runs all.
  std::vector<int> only;
};

struct Check {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  /// "<=" (measured <= tolerance), ">=" or "==" (exact equality).
  std::string relation = "<=";
  bool passed = false;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<Check> checks;
  double seconds = 0.0;
  double time_limit = 0.0;
  bool passed = false;
  std::string error;  ///< set when the criterion threw

  /// One line: verdict, id, name, each check, runtime.
  std::string summary_line() const;
};

nlohmann::json to_json(const CriterionResult& r);

CriterionResult criterion_zero_budget(const AcceptanceOptions& opts);
CriterionResult criterion_tau_star(const AcceptanceOptions& opts);
CriterionResult criterion_theory_simulation(const AcceptanceOptions& opts);
CriterionResult criterion_pareto(const AcceptanceOptions& opts);
CriterionResult criterion_large_delta(const AcceptanceOptions& opts);
CriterionResult criterion_small_eps(const AcceptanceOptions& opts);
CriterionResult criterion_g_limit(const AcceptanceOptions& opts);
CriterionResult criterion_convex_concave(const AcceptanceOptions& opts);
CriterionResult criterion_figure_shapes(const AcceptanceOptions& opts);
CriterionResult criterion_risk_oracles(const AcceptanceOptions& opts);

/// Runs the selected criteria in order; `on_result` sees each as it finishes.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opts,
    const std::function<void(const CriterionResult&)>& on_result = {});

}  // namespace advtrade
