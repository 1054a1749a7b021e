#include "pscopf/scopf.hpp"

#include "pscopf/errors.hpp"
#include "pscopf/units.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace pscopf {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

// Generator index that is out of service in contingency i, if any.
std::optional<std::size_t> outaged_generator(const ContingencySet& set, std::size_t i) {
  const auto& c = set.contingencies[i];
  if (c.kind == ContingencyKind::kGeneratorOutage) return c.element;
  return std::nullopt;
}

}  // namespace

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kGenUpper: return "gen-upper";
    case ConstraintKind::kGenLower: return "gen-lower";
    case ConstraintKind::kFlowUpper: return "flow-upper";
    case ConstraintKind::kFlowLower: return "flow-lower";
  }
  return "?";
}

Eigen::RowVectorXd ScopfProblem::coefficients(const ConstraintRecord& record) const {
  if (record.is_flow()) return flow_blocks[record.contingency].dispatch.row(idx(record.element));
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(idx(generator_count()));
  row(idx(record.element)) += 1.0;
  if (const auto out = outaged_generator(contingencies, record.contingency)) {
    row(idx(*out)) += contingencies.participation[record.contingency](idx(record.element));
  }
  return row;
}

double ScopfProblem::constant(const ConstraintRecord& record) const {
  return record.is_flow() ? flow_blocks[record.contingency].offset(idx(record.element)) : 0.0;
}

Eigen::RowVectorXd ScopfProblem::sensitivity(const ConstraintRecord& record) const {
  if (record.is_flow()) return flow_blocks[record.contingency].sensitivity.row(idx(record.element));
  const double d = contingencies.participation[record.contingency](idx(record.element));
  return Eigen::RowVectorXd::Constant(idx(network.bus_count()), -d);
}

double ScopfProblem::nominal_value(const ConstraintRecord& record, const Eigen::VectorXd& p_g) const {
  return coefficients(record).dot(p_g) + constant(record);
}

Eigen::VectorXd ScopfProblem::nominal_values(const Eigen::VectorXd& p_g) const {
  Eigen::VectorXd values(idx(records.size()));
  std::size_t cached = contingencies.size();
  Eigen::VectorXd flows;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    if (r.is_flow()) {
      if (cached != r.contingency) {
        const auto& block = flow_blocks[r.contingency];
        flows = block.dispatch * p_g + block.offset;
        cached = r.contingency;
      }
      values(idx(k)) = flows(idx(r.element));
    } else {
      double v = p_g(idx(r.element));
      if (const auto out = outaged_generator(contingencies, r.contingency)) {
        v += contingencies.participation[r.contingency](idx(r.element)) * p_g(idx(*out));
      }
      values(idx(k)) = v;
    }
  }
  return values;
}

std::string ScopfProblem::describe(const ConstraintRecord& record) const {
  std::string element;
  if (record.is_flow()) {
    const auto& line = network.lines[record.element];
    element = "line " + network.buses[line.from].id + "-" + network.buses[line.to].id + "#" +
              std::to_string(record.element);
  } else {
    element = "gen " + std::to_string(record.element) + "@" +
              network.buses[network.generators[record.element].bus].id;
  }
  return to_string(record.kind) + " " + element + " [" +
         pscopf::describe(network, contingencies.contingencies[record.contingency]) + "]";
}

LinearProgram ScopfProblem::to_linear_program() const {
  const auto ng = generator_count();
  LinearProgram lp(ng);
  for (std::size_t g = 0; g < ng; ++g) lp.objective(idx(g)) = network.generators[g].cost;
  const auto m = idx(records.size()) + 1;
  lp.rows.resize(m, idx(ng));
  lp.rhs.resize(m);
  lp.sense.reserve(static_cast<std::size_t>(m));
  lp.rows.row(0).setOnes();
  lp.rhs(0) = balance_rhs;
  lp.sense.push_back(RowSense::kEqual);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    lp.rows.row(idx(k) + 1) = coefficients(r);
    lp.rhs(idx(k) + 1) = r.tightened_limit() - constant(r);
    lp.sense.push_back(r.is_upper() ? RowSense::kLessEqual : RowSense::kGreaterEqual);
  }
  return lp;
}

ForecastModel zero_forecast_model(const NetworkCase& network) {
  const auto n = idx(network.bus_count());
  return make_forecast_model(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n));
}

ScopfProblem assemble(const NetworkCase& network, const ContingencySet& contingencies,
                      const ForecastModel& model, const DistributionAssumption& assumption,
                      double eps) {
  check_dimensions(network, model);
  if (contingencies.size() == 0 ||
      contingencies.contingencies.front().kind != ContingencyKind::kBase) {
    throw ValidationError("contingency set must start with the base case");
  }
  const auto n = idx(network.bus_count());
  const auto ng = idx(network.generator_count());
  const auto nl = network.line_count();

  ScopfProblem problem;
  problem.network = network;
  problem.contingencies = contingencies;
  problem.assumption = assumption;
  problem.eps = eps;
  problem.quantile = f_inv(assumption, eps);
  problem.balance_rhs = network.loads.sum() - network.forecast_infeeds.sum();

  const double q = problem.quantile;
  const Eigen::MatrixXd incidence = generator_incidence(network);
  const Eigen::VectorXd net_fixed = network.forecast_infeeds - network.loads;
  // The deterministic problem ignores the forecast model altogether.
  const ForecastModel effective = assumption.kind() == AssumptionKind::kDeterministic
                                      ? zero_forecast_model(network)
                                      : model;
  // Sum of all forecast errors: 1^T mu and ||1^T Sigma^{1/2}||.
  const double total_shift = effective.mu.sum();
  const double total_spread = effective.sigma_sqrt.colwise().sum().norm();

  problem.flow_blocks.reserve(contingencies.size());
  for (std::size_t i = 0; i < contingencies.size(); ++i) {
    const auto& a = contingencies.flow_matrix(i);
    const Eigen::VectorXd& d = contingencies.participation[i];
    const auto out = outaged_generator(contingencies, i);
    const Eigen::VectorXd balancing = a * (incidence * d);  // A C d

    ScopfProblem::FlowBlock block;
    block.dispatch = a * incidence;
    if (out) block.dispatch.col(idx(*out)) = balancing;
    block.offset = a * net_fixed;
    block.sensitivity = a - balancing * Eigen::RowVectorXd::Ones(n);

    const Eigen::VectorXd shifts = block.sensitivity * effective.mu;
    const Eigen::VectorXd spreads = (block.sensitivity * effective.sigma_sqrt).rowwise().norm();

    if (contingencies.contingencies[i].kind != ContingencyKind::kLineOutage) {
      for (Index g = 0; g < ng; ++g) {
        const auto& gen = network.generators[static_cast<std::size_t>(g)];
        const double dg = d(g);
        ConstraintRecord upper{ConstraintKind::kGenUpper, i, static_cast<std::size_t>(g), gen.p_max, {}, false};
        ConstraintRecord lower{ConstraintKind::kGenLower, i, static_cast<std::size_t>(g), gen.p_min, {}, false};
        // b = -d_g 1^T
        const double shift = -dg * total_shift;
        const double spread = dg * total_spread;
        upper.margin = {shift, spread, q, shift + q * spread};
        lower.margin = {-shift, spread, q, -shift + q * spread};
        const bool empty = upper.tightened_limit() < lower.tightened_limit();
        upper.margin_infeasible = lower.margin_infeasible = empty;
        problem.records.push_back(upper);
        problem.records.push_back(lower);
      }
    }

    for (std::size_t l = 0; l < nl; ++l) {
      const auto& c = contingencies.contingencies[i];
      if (c.kind == ContingencyKind::kLineOutage && c.element == l) continue;
      const double limit = network.lines[l].flow_limit;
      const double shift = shifts(idx(l));
      const double spread = spreads(idx(l));
      ConstraintRecord upper{ConstraintKind::kFlowUpper, i, l, limit, {shift, spread, q, shift + q * spread}, false};
      ConstraintRecord lower{ConstraintKind::kFlowLower, i, l, -limit, {-shift, spread, q, -shift + q * spread}, false};
      const bool empty = upper.tightened_limit() < lower.tightened_limit();
      upper.margin_infeasible = lower.margin_infeasible = empty;
      problem.records.push_back(upper);
      problem.records.push_back(lower);
    }
    problem.flow_blocks.push_back(std::move(block));
  }
  return problem;
}

bool is_active(const ConstraintRecord& record, double slack, double relative_tolerance) {
  return slack <= relative_tolerance * std::max(1.0, std::abs(record.limit));
}

ScopfSolution solve(const ScopfProblem& problem, const SolveOptions& options) {
  const auto ng = problem.generator_count();
  const double base = problem.network.base_mva;
  const std::size_t total = problem.records.size();

  ScopfSolution solution;
  solution.margins_applied = problem.records;
  for (const auto& r : problem.records) {
    if (r.margin_infeasible && r.is_upper()) {
      solution.diagnostics.push_back("uncertainty margin leaves no feasible range: " +
                                     problem.describe(r) + " (limit " + std::to_string(r.limit) +
                                     " MW, margin " + std::to_string(r.margin.total) + " MW)");
    }
  }
  if (ng == 0) {
    solution.status = std::abs(problem.balance_rhs) <= options.feasibility_tolerance * base
                          ? LpStatus::kOptimal
                          : LpStatus::kInfeasible;
    solution.p_g = Eigen::VectorXd::Zero(0);
    return solution;
  }

  // Per-unit rows: coefficients * x_pu (sense) (tightened - constant) / base.
  LinearProgram lp(ng);
  for (std::size_t g = 0; g < ng; ++g) lp.objective(idx(g)) = problem.network.generators[g].cost;
  lp.add_row(Eigen::RowVectorXd::Ones(idx(ng)), RowSense::kEqual,
             units::to_per_unit(problem.balance_rhs, base));
  std::vector<bool> in_working(total, false);
  auto add_record = [&](std::size_t k) {
    const auto& r = problem.records[k];
    lp.add_row(problem.coefficients(r), r.is_upper() ? RowSense::kLessEqual : RowSense::kGreaterEqual,
               units::to_per_unit(r.tightened_limit() - problem.constant(r), base));
    in_working[k] = true;
  };
  for (std::size_t k = 0; k < total; ++k) {
    const auto& r = problem.records[k];
    if (!r.is_flow() && r.contingency == 0) add_record(k);
  }

  Eigen::VectorXd x_pu;
  for (std::size_t round = 0;; ++round) {
    if (round >= options.max_rounds) {
      throw SolverFailure("constraint generation did not converge after " +
                          std::to_string(options.max_rounds) + " rounds");
    }
    const LpResult result = solve_lp(lp, options.simplex);
    solution.iterations += result.iterations;
    solution.rows_used = lp.row_count();
    if (result.status != LpStatus::kOptimal) {
      solution.status = result.status;
      if (result.status == LpStatus::kInfeasible && solution.diagnostics.empty()) {
        solution.diagnostics.push_back("no single constraint pair is empty; the " +
                                       std::to_string(lp.row_count()) +
                                       " working rows are jointly infeasible");
      }
      return solution;
    }
    x_pu = result.x;

    const Eigen::VectorXd p_mw = x_pu * base;
    const Eigen::VectorXd values = problem.nominal_values(p_mw);
    std::vector<std::pair<double, std::size_t>> violated;
    for (std::size_t k = 0; k < total; ++k) {
      if (in_working[k]) continue;
      const auto& r = problem.records[k];
      const double bound = r.tightened_limit();
      const double excess = r.is_upper() ? values(idx(k)) - bound : bound - values(idx(k));
      if (excess > options.feasibility_tolerance * base) violated.emplace_back(excess, k);
    }
    if (violated.empty()) break;
    const auto take = std::min(options.rows_per_round, violated.size());
    std::partial_sort(violated.begin(), violated.begin() + static_cast<std::ptrdiff_t>(take),
                      violated.end(), [](const auto& a, const auto& b) {
                        return a.first > b.first || (a.first == b.first && a.second < b.second);
                      });
    for (std::size_t k = 0; k < take; ++k) add_record(violated[k].second);
  }

  solution.status = LpStatus::kOptimal;
  solution.p_g = x_pu * base;
  solution.objective = 0.0;
  for (std::size_t g = 0; g < ng; ++g) {
    solution.objective += problem.network.generators[g].cost * solution.p_g(idx(g));
  }
  const Eigen::VectorXd values = problem.nominal_values(solution.p_g);
  solution.slack.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    const auto& r = problem.records[k];
    const double bound = r.tightened_limit();
    solution.slack[k] = r.is_upper() ? bound - values(idx(k)) : values(idx(k)) - bound;
    if (is_active(r, solution.slack[k], options.active_tolerance)) {
      solution.binding.push_back(r);
      solution.binding_index.push_back(k);
    }
  }
  return solution;
}

ScopfSolution solve_deterministic(const NetworkCase& network, const ContingencySet& contingencies,
                                  const SolveOptions& options) {
  const auto problem = assemble(network, contingencies, zero_forecast_model(network),
                                DistributionAssumption::deterministic(), 0.5);
  return solve(problem, options);
}

}  // namespace pscopf
