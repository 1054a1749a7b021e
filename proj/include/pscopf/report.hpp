#pragma once

#include "pscopf/distributions.hpp"
#include "pscopf/scopf.hpp"
#include "pscopf/validation.hpp"

#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace pscopf {

// Shortest round-trip decimal form, locale independent.
std::string format_number(double value);

// {status, objective, dispatch, binding, excluded_contingencies, diagnostics}
nlohmann::ordered_json solution_json(const ScopfProblem& problem, const ScopfSolution& solution);

// One row per record: limits, margin parts, nominal value and slack.
void write_constraints_csv(std::ostream& out, const ScopfProblem& problem,
                           const ScopfSolution& solution);

void write_violations_csv(std::ostream& out, const ScopfProblem& problem,
                          const ViolationReport& report);
nlohmann::ordered_json violation_summary_json(const ViolationReport& report, double eps);

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

// f^-1(1 - eps) grid: one row per eps, one column per assumption.
void write_quantile_grid_csv(std::ostream& out, const std::vector<double>& eps_values, double dof);

void write_margin_comparison_csv(std::ostream& out, const ScopfProblem& problem,
                                 const std::vector<MarginComparison>& rows);

}  // namespace pscopf
