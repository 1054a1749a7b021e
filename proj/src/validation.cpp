#include "pscopf/validation.hpp"

#include "pscopf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pscopf {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

constexpr double kMixtureWeight = 0.3;
constexpr double kMixtureLogScale = 0.75;
constexpr double kMixtureCoreScale = 0.6;

struct MixtureMoments {
  double mean;
  double sd;
};

MixtureMoments skewed_mixture_moments() {
  const double s2 = kMixtureLogScale * kMixtureLogScale;
  const double mean = kMixtureWeight * std::exp(0.5 * s2);
  const double second = kMixtureWeight * std::exp(2.0 * s2) +
                        (1.0 - kMixtureWeight) * kMixtureCoreScale * kMixtureCoreScale;
  return {mean, std::sqrt(second - mean * mean)};
}

// Columns of the samples that are not identically zero.
std::vector<Index> active_columns(const Eigen::MatrixXd& samples) {
  std::vector<Index> cols;
  for (Index c = 0; c < samples.cols(); ++c) {
    if (samples.col(c).cwiseAbs().maxCoeff() > 0.0) cols.push_back(c);
  }
  return cols;
}

}  // namespace

double violation_frequency(const Eigen::VectorXd& values, double limit, bool upper) {
  if (values.size() == 0) throw InsufficientDataError("no values to evaluate");
  std::size_t count = 0;
  for (Index k = 0; k < values.size(); ++k) {
    count += (upper ? values(k) > limit : values(k) < limit) ? 1 : 0;
  }
  return static_cast<double>(count) / static_cast<double>(values.size());
}

double replay_value(const ScopfProblem& problem, const ConstraintRecord& record,
                    const Eigen::VectorXd& p_g, const Eigen::VectorXd& delta) {
  if (delta.size() != idx(problem.network.bus_count())) {
    throw DimensionError("forecast error must have one entry per bus");
  }
  return problem.nominal_value(record, p_g) + problem.sensitivity(record).dot(delta);
}

Eigen::VectorXd deviation_samples(const ScopfProblem& problem, const ConstraintRecord& record,
                                  const Eigen::MatrixXd& samples) {
  if (samples.cols() != idx(problem.network.bus_count())) {
    throw DimensionError("samples have " + std::to_string(samples.cols()) + " columns, case has " +
                         std::to_string(problem.network.bus_count()) + " buses");
  }
  return samples * problem.sensitivity(record).transpose();
}

ViolationReport empirical_violations(const ScopfProblem& problem, const ScopfSolution& solution,
                                     const Eigen::MatrixXd& samples, double active_tolerance) {
  if (solution.status != LpStatus::kOptimal) {
    throw ValidationError("cannot replay samples through a " + to_string(solution.status) +
                          " solution");
  }
  if (samples.cols() != idx(problem.network.bus_count())) {
    throw DimensionError("samples have " + std::to_string(samples.cols()) + " columns, case has " +
                         std::to_string(problem.network.bus_count()) + " buses");
  }
  if (samples.rows() == 0) throw InsufficientDataError("no samples to replay");
  if (solution.slack.size() != problem.records.size()) {
    throw DimensionError("solution does not belong to this problem");
  }

  const Index s = samples.rows();
  const Eigen::VectorXd nominal = problem.nominal_values(solution.p_g);
  const Eigen::VectorXd total_error = samples.rowwise().sum();

  // Restrict the replay to buses that actually carry forecast errors.
  const auto cols = active_columns(samples);
  Eigen::MatrixXd reduced(s, idx(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) reduced.col(idx(k)) = samples.col(cols[k]);
  const Eigen::MatrixXd reduced_t = reduced.transpose();

  ViolationReport report;
  report.samples_used = static_cast<std::size_t>(s);
  report.per_constraint.resize(problem.records.size());

  std::size_t cached = problem.contingencies.size();
  Eigen::MatrixXd deviations;  // n_L x s
  for (std::size_t k = 0; k < problem.records.size(); ++k) {
    const auto& r = problem.records[k];
    std::size_t count = 0;
    const double a = nominal(idx(k));
    if (r.is_flow()) {
      if (cached != r.contingency) {
        const auto& sens = problem.flow_blocks[r.contingency].sensitivity;
        Eigen::MatrixXd sens_reduced(sens.rows(), idx(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) sens_reduced.col(idx(c)) = sens.col(cols[c]);
        deviations.noalias() = sens_reduced * reduced_t;
        cached = r.contingency;
      }
      const auto row = deviations.row(idx(r.element));
      for (Index j = 0; j < s; ++j) {
        const double v = a + row(j);
        count += (r.is_upper() ? v > r.limit : v < r.limit) ? 1 : 0;
      }
    } else {
      const double d = problem.contingencies.participation[r.contingency](idx(r.element));
      for (Index j = 0; j < s; ++j) {
        const double v = a - d * total_error(j);
        count += (r.is_upper() ? v > r.limit : v < r.limit) ? 1 : 0;
      }
    }
    auto& out = report.per_constraint[k];
    out.record = k;
    out.violations = count;
    out.eps_hat = static_cast<double>(count) / static_cast<double>(s);
    out.active = is_active(r, solution.slack[k], active_tolerance);
  }

  double sum_active = 0.0;
  for (const auto& c : report.per_constraint) {
    report.eps_max = std::max(report.eps_max, c.eps_hat);
    if (c.active) {
      sum_active += c.eps_hat;
      ++report.active_count;
    }
  }
  report.eps_avg_active =
      report.active_count ? sum_active / static_cast<double>(report.active_count) : 0.0;
  return report;
}

double empirical_margin(const Eigen::VectorXd& deviations, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  const auto s = static_cast<double>(deviations.size());
  if (s < 1.0 / eps - 1e-9) {
    throw InsufficientDataError("empirical margin at eps=" + std::to_string(eps) + " needs at least " +
                                std::to_string(static_cast<long>(std::ceil(1.0 / eps - 1e-9))) +
                                " samples, got " + std::to_string(deviations.size()));
  }
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - eps) * s - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, static_cast<std::size_t>(deviations.size()));
  std::vector<double> values(deviations.data(), deviations.data() + deviations.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

std::vector<ComparisonRow> compare_assumptions(const NetworkCase& network,
                                               const ContingencySet& contingencies,
                                               const ForecastModel& model, double eps,
                                               const Eigen::MatrixXd& samples, double dof,
                                               const SolveOptions& options) {
  std::vector<ComparisonRow> rows;
  double baseline = 0.0;
  bool have_baseline = false;
  for (const auto& assumption : all_assumptions(dof)) {
    const auto problem = assemble(network, contingencies, model, assumption, eps);
    const auto solution = solve(problem, options);
    ComparisonRow row;
    row.assumption = assumption;
    row.status = solution.status;
    row.quantile = problem.quantile;
    if (solution.status == LpStatus::kOptimal) {
      row.objective = solution.objective;
      if (assumption.kind() == AssumptionKind::kDeterministic) {
        baseline = solution.objective;
        have_baseline = true;
      }
      row.normalized_cost = have_baseline && baseline != 0.0 ? row.objective / baseline : 0.0;
      const auto report = empirical_violations(problem, solution, samples, options.active_tolerance);
      row.eps_avg_active = report.eps_avg_active;
      row.eps_max = report.eps_max;
      row.active_count = report.active_count;
    }
    rows.push_back(row);
  }
  return rows;
}

MarginComparison compare_margins(const ScopfProblem& problem, std::size_t record,
                                 const ForecastModel& model, const Eigen::MatrixXd& samples,
                                 double eps, double dof) {
  if (record >= problem.records.size()) throw DomainError("record index out of range");
  const auto& r = problem.records[record];
  Eigen::VectorXd deviations = deviation_samples(problem, r, samples);
  Eigen::RowVectorXd b = problem.sensitivity(r);
  if (!r.is_upper()) {  // lower rows bound -b delta from above
    deviations = -deviations;
    b = -b;
  }
  MarginComparison out;
  out.record = record;
  out.empirical = empirical_margin(deviations, eps);
  for (const auto& assumption : all_assumptions(dof)) {
    if (assumption.kind() == AssumptionKind::kDeterministic) continue;
    out.analytical.emplace_back(assumption, margin(b, model, assumption, eps).total);
  }
  return out;
}

std::string to_string(SampleFamily family) {
  switch (family) {
    case SampleFamily::kGaussian: return "gaussian";
    case SampleFamily::kStudentT: return "student_t";
    case SampleFamily::kTriangular: return "triangular";
    case SampleFamily::kSkewedMixture: return "skewed";
  }
  return "?";
}

SampleFamily parse_sample_family(std::string_view name) {
  if (name == "gaussian") return SampleFamily::kGaussian;
  if (name == "student_t") return SampleFamily::kStudentT;
  if (name == "triangular") return SampleFamily::kTriangular;
  if (name == "skewed") return SampleFamily::kSkewedMixture;
  throw DomainError("unknown sample family '" + std::string(name) + "'");
}

Eigen::MatrixXd synthesize_samples(const ForecastModel& model, const SynthesisSpec& spec) {
  if (spec.count == 0) throw DomainError("sample count must be at least 1");
  if (spec.family == SampleFamily::kStudentT && !(spec.dof > 2.0)) {
    throw DomainError("student_t family needs more than 2 degrees of freedom");
  }
  const Index n = model.mu.size();
  if (model.sigma_sqrt.rows() != n || model.sigma_sqrt.cols() != n) {
    throw DimensionError("forecast model factor has the wrong shape");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::student_t_distribution<double> student(spec.family == SampleFamily::kStudentT ? spec.dof : 3.0);
  const double t_scale = spec.family == SampleFamily::kStudentT ? std::sqrt((spec.dof - 2.0) / spec.dof) : 1.0;
  const auto mixture = skewed_mixture_moments();
  const double sqrt6 = std::sqrt(6.0);

  auto draw = [&]() -> double {
    switch (spec.family) {
      case SampleFamily::kGaussian:
        return gauss(rng);
      case SampleFamily::kStudentT:
        return student(rng) * t_scale;
      case SampleFamily::kTriangular:
        return sqrt6 * (uniform(rng) + uniform(rng) - 1.0);
      case SampleFamily::kSkewedMixture: {
        const bool tail = uniform(rng) < kMixtureWeight;
        const double z = gauss(rng);
        const double y = tail ? std::exp(kMixtureLogScale * z) : kMixtureCoreScale * z;
        return (y - mixture.mean) / mixture.sd;
      }
    }
    return 0.0;
  };

  const auto s = idx(spec.count);
  Eigen::MatrixXd z(s, n);
  for (Index r = 0; r < s; ++r) {
    for (Index c = 0; c < n; ++c) z(r, c) = draw();
  }
  Eigen::MatrixXd out = z * model.sigma_sqrt.transpose();
  out.rowwise() += model.mu.transpose();
  return out;
}

ForecastModel synthetic_forecast_model(const NetworkCase& network, double std_fraction,
                                       std::uint64_t seed) {
  if (!(std_fraction >= 0.0)) throw DomainError("standard deviation fraction must be nonnegative");
  const Index n = idx(network.bus_count());
  const auto& sites = network.uncertain_buses;
  const Index m = idx(sites.size());

  double mean_load = 0.0;
  Index loaded = 0;
  for (Index b = 0; b < n; ++b) {
    if (network.loads(b) > 0.0) {
      mean_load += network.loads(b);
      ++loaded;
    }
  }
  mean_load = loaded ? mean_load / static_cast<double>(loaded) : 1.0;

  Eigen::VectorXd sd(m);
  for (Index k = 0; k < m; ++k) {
    const double load = network.loads(idx(sites[static_cast<std::size_t>(k)]));
    sd(k) = std_fraction * (load > 0.0 ? load : mean_load);
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  constexpr Index kFactors = 3;
  Eigen::MatrixXd loadings(m, kFactors);
  for (Index k = 0; k < m; ++k) {
    for (Index f = 0; f < kFactors; ++f) loadings(k, f) = uniform(rng);
  }
  Eigen::MatrixXd corr = loadings * loadings.transpose();
  corr.diagonal().array() += 1.0;
  const Eigen::VectorXd inv_sqrt = corr.diagonal().cwiseSqrt().cwiseInverse();
  corr = inv_sqrt.asDiagonal() * corr * inv_sqrt.asDiagonal();
  const Eigen::MatrixXd site_sigma = sd.asDiagonal() * corr * sd.asDiagonal();

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      sigma(idx(sites[static_cast<std::size_t>(i)]), idx(sites[static_cast<std::size_t>(j)])) =
          site_sigma(i, j);
    }
  }
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return make_forecast_model(Eigen::VectorXd::Zero(n), std::move(sigma));
}

}  // namespace pscopf
