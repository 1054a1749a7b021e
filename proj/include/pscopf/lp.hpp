#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace pscopf {

enum class RowSense { kLessEqual, kGreaterEqual, kEqual };

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

std::string to_string(LpStatus status);

// min c^T x  s.t.  rows x (<=, >=, =) rhs,  lower <= x <= upper.
// Bounds may be infinite.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;
  std::vector<RowSense> sense;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  // Free variables, no rows.
  explicit LinearProgram(std::size_t variables = 0);

  std::size_t variable_count() const { return static_cast<std::size_t>(objective.size()); }
  std::size_t row_count() const { return sense.size(); }
  void add_row(const Eigen::RowVectorXd& coefficients, RowSense row_sense, double value);
};

struct SimplexOptions {
  double pivot_tolerance = 1e-9;
  double feasibility_tolerance = 1e-9;
  double optimality_tolerance = 1e-9;
  std::size_t max_iterations = 50000;
  // Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t degenerate_switch = 50;
};

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Dense two-phase primal simplex. Infeasible and unbounded problems are
// reported through the status; SolverFailure is thrown only when the
// iteration limit is hit or the input is malformed.
LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

// CPLEX LP text. Names default to x<j> and r<i>.
std::string to_lp_format(const LinearProgram& lp, const std::vector<std::string>& variable_names = {},
                         const std::vector<std::string>& row_names = {});

}  // namespace pscopf
