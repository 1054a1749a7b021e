#pragma once

#include "pscopf/case_io.hpp"

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace pscopf {

enum class AssumptionKind {
  kDeterministic,
  kNormal,
  kStudentT,
  kSymmetricUnimodal,
  kUnimodal,
  kMeanCovariance,
};

// Distributional assumption on the standardized constraint deviation. Only
// the Student-t variant carries a parameter (degrees of freedom, > 2).
class DistributionAssumption {
 public:
  static constexpr double kDefaultDof = 4.0;

  static DistributionAssumption deterministic() { return DistributionAssumption(AssumptionKind::kDeterministic); }
  static DistributionAssumption normal() { return DistributionAssumption(AssumptionKind::kNormal); }
  static DistributionAssumption student_t(double dof = kDefaultDof);
  static DistributionAssumption symmetric_unimodal() { return DistributionAssumption(AssumptionKind::kSymmetricUnimodal); }
  static DistributionAssumption unimodal() { return DistributionAssumption(AssumptionKind::kUnimodal); }
  static DistributionAssumption mean_covariance() { return DistributionAssumption(AssumptionKind::kMeanCovariance); }

  // Accepts the names produced by name(); `dof` applies to student-t.
  static DistributionAssumption parse(std::string_view name, double dof = kDefaultDof);

  AssumptionKind kind() const { return kind_; }
  double dof() const { return dof_; }
  std::string name() const;

  bool operator==(const DistributionAssumption&) const = default;

 private:
  explicit DistributionAssumption(AssumptionKind kind, double dof = 0.0) : kind_(kind), dof_(dof) {}
  AssumptionKind kind_;
  double dof_;
};

// Deterministic, Normal, Student-t, symmetric unimodal, unimodal,
// mean-covariance: least to most conservative, the Student-t aside.
std::vector<DistributionAssumption> all_assumptions(double dof = DistributionAssumption::kDefaultDof);

double normal_cdf(double x);
// Inverse of normal_cdf for p in (0, 1).
double normal_quantile(double p);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);
// P[T > t] for a standard Student-t variate with `dof` degrees of freedom.
double student_t_upper_tail(double t, double dof);
double student_t_cdf(double t, double dof);
// Inverse of student_t_cdf for p in (0, 1).
double student_t_quantile(double p, double dof);

// Generalized inverse f^-1(1 - eps) of the worst-case distribution function
// of a zero-mean, unit-variance deviation under `assumption`, clamped at zero.
// Throws DomainError unless 0 < eps < 1.
double f_inv(const DistributionAssumption& assumption, double eps);

// Capacity reduction that turns P[a + b delta <= c] >= 1 - eps into
// a <= c - total.
struct UncertaintyMargin {
  double shift = 0.0;     // b mu (MW)
  double spread = 0.0;    // ||b Sigma^{1/2}||_2 (MW)
  double quantile = 0.0;  // f^-1(1 - eps)
  double total = 0.0;     // shift + quantile * spread (MW)
};

UncertaintyMargin margin(const Eigen::RowVectorXd& sensitivity, const ForecastModel& model,
                         const DistributionAssumption& assumption, double eps);

// Same, with f^-1 already evaluated; used when assembling many rows.
UncertaintyMargin margin_with_quantile(const Eigen::RowVectorXd& sensitivity,
                                       const ForecastModel& model, double quantile);

}  // namespace pscopf
