#pragma once

#include "pscopf/case_io.hpp"
#include "pscopf/dc_network.hpp"
#include "pscopf/distributions.hpp"
#include "pscopf/scopf.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pscopf {

struct ConstraintViolation {
  std::size_t record = 0;  // position in ScopfProblem::records
  std::size_t violations = 0;
  double eps_hat = 0.0;
  bool active = false;
};

struct ViolationReport {
  std::vector<ConstraintViolation> per_constraint;
  double eps_avg_active = 0.0;  // 0 when no constraint is active
  double eps_max = 0.0;
  std::size_t active_count = 0;
  std::size_t samples_used = 0;
};

// Fraction of `values` beyond `limit` (strictly above for upper limits,
// strictly below for lower limits).
double violation_frequency(const Eigen::VectorXd& values, double limit, bool upper);

// Physical value a(P_G) + b delta of one record for one bus-indexed
// forecast-error realization.
double replay_value(const ScopfProblem& problem, const ConstraintRecord& record,
                    const Eigen::VectorXd& p_g, const Eigen::VectorXd& delta);

// Deviation b delta of one record for every sample row (s x n, bus-indexed).
Eigen::VectorXd deviation_samples(const ScopfProblem& problem, const ConstraintRecord& record,
                                  const Eigen::MatrixXd& samples);

// Replays every sample through the fixed dispatch and counts limit
// violations per record. A record is active when its nominal slack is at most
// `active_tolerance` relative to max(1 MW, |limit|). Throws unless the
// solution is optimal and the samples are bus-indexed.
ViolationReport empirical_violations(const ScopfProblem& problem, const ScopfSolution& solution,
                                     const Eigen::MatrixXd& samples,
                                     double active_tolerance = 1e-5);

// (1 - eps) empirical quantile: the ceil((1 - eps) s)-th smallest value.
// Requires s >= 1 / eps.
double empirical_margin(const Eigen::VectorXd& deviations, double eps);

struct ComparisonRow {
  DistributionAssumption assumption = DistributionAssumption::deterministic();
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  double normalized_cost = 0.0;  // objective / deterministic objective
  double quantile = 0.0;         // f^-1(1 - eps)
  double eps_avg_active = 0.0;
  double eps_max = 0.0;
  std::size_t active_count = 0;
};

// Solves the deterministic problem and the five probabilistic variants and
// replays `samples` (bus-indexed) through each. Infeasible members keep
// their row with the status set.
std::vector<ComparisonRow> compare_assumptions(const NetworkCase& network,
                                               const ContingencySet& contingencies,
                                               const ForecastModel& model, double eps,
                                               const Eigen::MatrixXd& samples,
                                               double dof = DistributionAssumption::kDefaultDof,
                                               const SolveOptions& options = {});

// Empirical uncertainty margin of one record against the analytical margins
// of every assumption.
struct MarginComparison {
  std::size_t record = 0;
  double empirical = 0.0;
  std::vector<std::pair<DistributionAssumption, double>> analytical;
};

MarginComparison compare_margins(const ScopfProblem& problem, std::size_t record,
                                 const ForecastModel& model, const Eigen::MatrixXd& samples,
                                 double eps, double dof = DistributionAssumption::kDefaultDof);

enum class SampleFamily { kGaussian, kStudentT, kTriangular, kSkewedMixture };

std::string to_string(SampleFamily family);
SampleFamily parse_sample_family(std::string_view name);

struct SynthesisSpec {
  SampleFamily family = SampleFamily::kGaussian;
  double dof = 4.0;  // student-t only, must exceed 2
  std::size_t count = 1000;
  std::uint64_t seed = 1;
};

// Draws delta = mu + L z, where L is the model's covariance factor and z has
// independent standardized entries (zero mean, unit variance) from the
// family, so every family reproduces mu and Sigma exactly in population.
//   gaussian   z ~ N(0, 1)
//   student_t  z = t_nu * sqrt((nu - 2) / nu)
//   triangular z = sqrt(6) (U1 + U2 - 1), symmetric on [-sqrt 6, sqrt 6]
//   skewed     z = standardized mixture: w.p. 0.3 a lognormal exp(0.75 Z),
//              else 0.6 Z; right-skewed with a sharp core
Eigen::MatrixXd synthesize_samples(const ForecastModel& model, const SynthesisSpec& spec);

// Synthetic forecast-error moments for a case without historical data:
// zero mean; standard deviation std_fraction * load at each uncertain bus
// (std_fraction * mean positive load where the bus carries none); correlation
// from three seeded nonnegative random factors plus unit idiosyncratic
// variance, normalized to unit diagonal.
ForecastModel synthetic_forecast_model(const NetworkCase& network, double std_fraction,
                                       std::uint64_t seed);

}  // namespace pscopf
