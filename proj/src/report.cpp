#include "pscopf/report.hpp"

#include <array>
#include <charconv>

namespace pscopf {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

nlohmann::ordered_json record_json(const ScopfProblem& problem, const ConstraintRecord& r) {
  nlohmann::ordered_json j;
  j["description"] = problem.describe(r);
  j["kind"] = to_string(r.kind);
  j["contingency"] = describe(problem.network, problem.contingencies.contingencies[r.contingency]);
  j["element"] = r.element;
  j["limit_mw"] = r.limit;
  j["margin_mw"] = r.margin.total;
  j["tightened_limit_mw"] = r.tightened_limit();
  return j;
}

}  // namespace

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

nlohmann::ordered_json solution_json(const ScopfProblem& problem, const ScopfSolution& solution) {
  nlohmann::ordered_json j;
  j["status"] = to_string(solution.status);
  j["assumption"] = problem.assumption.name();
  j["eps"] = problem.eps;
  j["quantile"] = problem.quantile;
  j["objective"] = solution.status == LpStatus::kOptimal ? nlohmann::ordered_json(solution.objective)
                                                         : nlohmann::ordered_json(nullptr);
  auto& dispatch = j["dispatch"] = nlohmann::ordered_json::array();
  if (solution.status == LpStatus::kOptimal) {
    for (std::size_t g = 0; g < problem.generator_count(); ++g) {
      const auto& gen = problem.network.generators[g];
      dispatch.push_back({{"generator", g},
                          {"bus", problem.network.buses[gen.bus].id},
                          {"p_mw", solution.p_g(idx(g))}});
    }
  }
  auto& binding = j["binding"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < solution.binding.size(); ++k) {
    auto row = record_json(problem, solution.binding[k]);
    row["slack_mw"] = solution.slack[solution.binding_index[k]];
    binding.push_back(std::move(row));
  }
  auto& excluded = j["excluded_contingencies"] = nlohmann::ordered_json::array();
  for (const auto& e : problem.contingencies.excluded) {
    excluded.push_back({{"contingency", describe(problem.network, e.contingency)}, {"reason", e.reason}});
  }
  j["contingencies_enforced"] = problem.contingencies.size();
  j["records"] = problem.records.size();
  j["diagnostics"] = solution.diagnostics;
  return j;
}

void write_constraints_csv(std::ostream& out, const ScopfProblem& problem,
                           const ScopfSolution& solution) {
  out << "record,kind,contingency,element,limit_mw,shift_mw,spread_mw,margin_mw,tightened_mw,"
         "nominal_mw,slack_mw,active,margin_infeasible\n";
  const bool solved = solution.status == LpStatus::kOptimal;
  const Eigen::VectorXd values = solved ? problem.nominal_values(solution.p_g) : Eigen::VectorXd();
  for (std::size_t k = 0; k < problem.records.size(); ++k) {
    const auto& r = problem.records[k];
    out << k << ',' << to_string(r.kind) << ','
        << describe(problem.network, problem.contingencies.contingencies[r.contingency]) << ','
        << r.element << ',' << format_number(r.limit) << ',' << format_number(r.margin.shift) << ','
        << format_number(r.margin.spread) << ',' << format_number(r.margin.total) << ','
        << format_number(r.tightened_limit()) << ',';
    if (solved) {
      out << format_number(values(idx(k))) << ',' << format_number(solution.slack[k]) << ','
          << (is_active(r, solution.slack[k]) ? 1 : 0);
    } else {
      out << ",,";
    }
    out << ',' << (r.margin_infeasible ? 1 : 0) << '\n';
  }
}

void write_violations_csv(std::ostream& out, const ScopfProblem& problem,
                          const ViolationReport& report) {
  out << "record,kind,contingency,element,violations,eps_hat,active\n";
  for (const auto& c : report.per_constraint) {
    const auto& r = problem.records[c.record];
    out << c.record << ',' << to_string(r.kind) << ','
        << describe(problem.network, problem.contingencies.contingencies[r.contingency]) << ','
        << r.element << ',' << c.violations << ',' << format_number(c.eps_hat) << ','
        << (c.active ? 1 : 0) << '\n';
  }
}

nlohmann::ordered_json violation_summary_json(const ViolationReport& report, double eps) {
  nlohmann::ordered_json j;
  j["eps"] = eps;
  j["samples_used"] = report.samples_used;
  j["constraints"] = report.per_constraint.size();
  j["active_count"] = report.active_count;
  j["eps_avg_active"] = report.eps_avg_active;
  j["eps_max"] = report.eps_max;
  return j;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "order,assumption,status,objective,normalized_cost,quantile,eps_avg_active,eps_max,"
         "active_count\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    out << k << ',' << r.assumption.name() << ',' << to_string(r.status) << ',';
    if (r.status == LpStatus::kOptimal) {
      out << format_number(r.objective) << ',' << format_number(r.normalized_cost) << ','
          << format_number(r.quantile) << ',' << format_number(r.eps_avg_active) << ','
          << format_number(r.eps_max) << ',' << r.active_count;
    } else {
      out << ",," << format_number(r.quantile) << ",,,";
    }
    out << '\n';
  }
}

void write_quantile_grid_csv(std::ostream& out, const std::vector<double>& eps_values, double dof) {
  const auto assumptions = all_assumptions(dof);
  out << "eps";
  for (const auto& a : assumptions) {
    if (a.kind() != AssumptionKind::kDeterministic) out << ',' << a.name();
  }
  out << '\n';
  for (const double eps : eps_values) {
    out << format_number(eps);
    for (const auto& a : assumptions) {
      if (a.kind() != AssumptionKind::kDeterministic) out << ',' << format_number(f_inv(a, eps));
    }
    out << '\n';
  }
}

void write_margin_comparison_csv(std::ostream& out, const ScopfProblem& problem,
                                 const std::vector<MarginComparison>& rows) {
  out << "record,description,empirical_mw";
  if (!rows.empty()) {
    for (const auto& [a, value] : rows.front().analytical) out << ',' << a.name() << "_mw";
  }
  out << '\n';
  for (const auto& row : rows) {
    out << row.record << ",\"" << problem.describe(problem.records[row.record]) << "\","
        << format_number(row.empirical);
    for (const auto& [a, value] : row.analytical) out << ',' << format_number(value);
    out << '\n';
  }
}

}  // namespace pscopf
