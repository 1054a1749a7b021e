#pragma once

#include "pscopf/case_io.hpp"
#include "pscopf/dc_network.hpp"
#include "pscopf/distributions.hpp"
#include "pscopf/lp.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace pscopf {

enum class ConstraintKind { kGenUpper, kGenLower, kFlowUpper, kFlowLower };

std::string to_string(ConstraintKind kind);

// One reformulated chance constraint a(P_G) + b delta <= c (upper kinds) or
// >= c (lower kinds). `margin` is always oriented towards the feasible side:
// upper rows enforce a <= limit - total, lower rows a >= limit + total. For
// lower rows it is therefore evaluated on -b.
struct ConstraintRecord {
  ConstraintKind kind = ConstraintKind::kGenUpper;
  std::size_t contingency = 0;  // position in the ContingencySet
  std::size_t element = 0;      // generator or line index
  double limit = 0.0;           // c (MW)
  UncertaintyMargin margin;
  // The upper/lower pair leaves an empty interval once margins are applied.
  bool margin_infeasible = false;

  bool is_upper() const { return kind == ConstraintKind::kGenUpper || kind == ConstraintKind::kFlowUpper; }
  bool is_flow() const { return kind == ConstraintKind::kFlowUpper || kind == ConstraintKind::kFlowLower; }
  double tightened_limit() const { return is_upper() ? limit - margin.total : limit + margin.total; }
};

// The linearized problem: min cost^T P_G subject to the balance row and one
// row per ConstraintRecord. Flow rows are stored per contingency as dense
// blocks; generator rows are formed on demand from the participation vectors.
struct ScopfProblem {
  struct FlowBlock {
    Eigen::MatrixXd dispatch;     // n_L x n_gen, coefficient of P_G in the nominal flow
    Eigen::VectorXd offset;       // n_L, A (P_R - P_D) in MW
    Eigen::MatrixXd sensitivity;  // n_L x n, A (I - C d 1^T)
  };

  NetworkCase network;
  ContingencySet contingencies;
  DistributionAssumption assumption = DistributionAssumption::deterministic();
  double eps = 0.1;
  double quantile = 0.0;
  double balance_rhs = 0.0;  // sum(P_D - P_R), MW
  std::vector<FlowBlock> flow_blocks;
  std::vector<ConstraintRecord> records;

  std::size_t generator_count() const { return network.generator_count(); }

  // Coefficients of the nominal quantity a(P_G) over generators, and its
  // constant part (MW).
  Eigen::RowVectorXd coefficients(const ConstraintRecord& record) const;
  double constant(const ConstraintRecord& record) const;
  // Physical sensitivity b to the forecast error, over buses (same for both
  // sides of a pair).
  Eigen::RowVectorXd sensitivity(const ConstraintRecord& record) const;
  double nominal_value(const ConstraintRecord& record, const Eigen::VectorXd& p_g) const;
  // Nominal values of every record at once.
  Eigen::VectorXd nominal_values(const Eigen::VectorXd& p_g) const;

  std::string describe(const ConstraintRecord& record) const;

  // Full LP in MW: balance row first, then one row per record in order.
  LinearProgram to_linear_program() const;
};

// Builds the tightened constraint set. Line-outage contingencies add no
// generator rows (identical to the base case) and an outaged line gets no
// flow rows (its flow is identically zero).
ScopfProblem assemble(const NetworkCase& network, const ContingencySet& contingencies,
                      const ForecastModel& model, const DistributionAssumption& assumption,
                      double eps);

struct ScopfSolution {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd p_g;         // MW
  double objective = 0.0;      // $/h
  std::vector<ConstraintRecord> binding;
  std::vector<std::size_t> binding_index;  // positions in margins_applied
  std::vector<ConstraintRecord> margins_applied;
  std::vector<double> slack;   // MW, per record; distance to the tightened limit
  std::vector<std::string> diagnostics;
  std::size_t rows_used = 0;   // rows in the final working LP
  std::size_t iterations = 0;  // simplex pivots summed over rounds
};

struct SolveOptions {
  // Primal feasibility in per-unit.
  double feasibility_tolerance = 1e-7;
  // Binding / active threshold, relative to max(1 MW, |limit|).
  double active_tolerance = 1e-5;
  // Violated rows added per constraint-generation round.
  std::size_t rows_per_round = 150;
  std::size_t max_rounds = 500;
  SimplexOptions simplex;
};

// Active-constraint test shared by the solver report and sample replay.
bool is_active(const ConstraintRecord& record, double slack, double relative_tolerance = 1e-5);

// Solves the LP by constraint generation: the balance row and base-case
// generator rows form the initial working set, violated rows are added until
// the working solution satisfies every record. The result is an optimum of
// the full LP.
ScopfSolution solve(const ScopfProblem& problem, const SolveOptions& options = {});

// Classical DC SCOPF: zero-mean, zero-covariance uncertainty.
ScopfSolution solve_deterministic(const NetworkCase& network, const ContingencySet& contingencies,
                                  const SolveOptions& options = {});

// Zero-mean, zero-covariance model of the case dimension.
ForecastModel zero_forecast_model(const NetworkCase& network);

}  // namespace pscopf
