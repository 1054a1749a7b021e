#include "pscopf/distributions.hpp"

#include "pscopf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pscopf {

namespace {

constexpr double kSixth = 1.0 / 6.0;

double poly(const double* c, int degree, double x) {
  double v = c[degree];
  for (int k = degree - 1; k >= 0; --k) v = v * x + c[k];
  return v;
}

// Wichura's AS241 (PPND16) approximation to the standard normal quantile,
// accurate to about 1e-16 relative.
double wichura_quantile(double p) {
  static constexpr double a[] = {3.387132872796366608,   133.14166789178437745,
                                 1971.5909503065514427,  13731.693765509461125,
                                 45921.953931549871457,  67265.770927008700853,
                                 33430.575583588128105,  2509.0809287301226727};
  static constexpr double b[] = {1.0,                   42.313330701600911252,
                                 687.1870074920579083,  5394.1960214247511077,
                                 21213.794301586595867, 39307.89580009271061,
                                 28729.085735721942674, 5226.495278852545925};
  static constexpr double c[] = {1.42343711074968357734,     4.6303378461565452959,
                                 5.7694972214606914055,      3.64784832476320460504,
                                 1.27045825245236838258,     0.24178072517745061177,
                                 0.0227238449892691845833,   7.7454501427834140764e-4};
  static constexpr double d[] = {1.0,                       2.05319162663775882187,
                                 1.6763848301838038494,     0.68976733498510000455,
                                 0.14810397642748007459,    0.0151986665636164571966,
                                 5.475938084995344946e-4,   1.05075007164441684324e-9};
  static constexpr double e[] = {6.6579046435011037772,     5.4637849111641143699,
                                 1.7848265399172913358,     0.29656057182850489123,
                                 0.026532189526576123093,   0.0012426609473880784386,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {1.0,                        0.59983220655588793769,
                                 0.13692988092273580531,     0.0148753612908506148525,
                                 7.868691311456132591e-4,    1.8463183175100546818e-5,
                                 1.4215117583164458887e-7,   2.04426310338993978564e-15};

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(a, 7, r) / poly(b, 7, r);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = poly(c, 7, r) / poly(d, 7, r);
  } else {
    r -= 5.0;
    value = poly(e, 7, r) / poly(f, 7, r);
  }
  return q < 0.0 ? -value : value;
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// x with P[Z > x] = q, q in (0, 1). One Newton step on the erfc tail removes
// any residual error of the rational approximation.
double normal_upper_quantile(double q) {
  double x = -wichura_quantile(q);
  for (int it = 0; it < 2; ++it) {
    const double density = normal_pdf(x);
    if (density <= 0.0) break;
    x += (normal_upper_tail(x) - q) / density;
  }
  return x;
}

// Lentz continued fraction for the incomplete beta function.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 2000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

// I_x(a, b) with y = 1 - x supplied separately to keep precision near x = 1.
double incomplete_beta_xy(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

double student_t_pdf(double t, double dof) {
  const double log_norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                          0.5 * std::log(dof * std::numbers::pi);
  return std::exp(log_norm - 0.5 * (dof + 1.0) * std::log1p(t * t / dof));
}

// t >= 0 with P[T > t] = q, q in (0, 1/2]. Newton iteration safeguarded by a
// bisection bracket.
double student_t_upper_quantile(double q, double dof) {
  if (q >= 0.5) return 0.0;
  double lo = 0.0;
  double hi = std::max(1.0, normal_upper_quantile(q));
  while (student_t_upper_tail(hi, dof) > q) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("student-t quantile bracket diverged");
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const double residual = student_t_upper_tail(t, dof) - q;
    if (residual > 0.0) lo = t; else hi = t;
    double next = t + residual / student_t_pdf(t, dof);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * std::max(1.0, t) || hi - lo <= 1e-15 * std::max(1.0, t)) {
      return next;
    }
    t = next;
  }
  return t;
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError("violation probability must lie in (0, 1), got " + std::to_string(eps));
  }
}

}  // namespace

DistributionAssumption DistributionAssumption::student_t(double dof) {
  if (!(dof > 2.0) || !std::isfinite(dof)) {
    throw DomainError("student-t degrees of freedom must exceed 2, got " + std::to_string(dof));
  }
  return DistributionAssumption(AssumptionKind::kStudentT, dof);
}

DistributionAssumption DistributionAssumption::parse(std::string_view name, double dof) {
  if (name == "deterministic") return deterministic();
  if (name == "normal") return normal();
  if (name == "student-t") return student_t(dof);
  if (name == "symmetric-unimodal") return symmetric_unimodal();
  if (name == "unimodal") return unimodal();
  if (name == "mean-covariance") return mean_covariance();
  throw DomainError("unknown assumption '" + std::string(name) + "'");
}

std::string DistributionAssumption::name() const {
  switch (kind_) {
    case AssumptionKind::kDeterministic: return "deterministic";
    case AssumptionKind::kNormal: return "normal";
    case AssumptionKind::kStudentT: return "student-t";
    case AssumptionKind::kSymmetricUnimodal: return "symmetric-unimodal";
    case AssumptionKind::kUnimodal: return "unimodal";
    case AssumptionKind::kMeanCovariance: return "mean-covariance";
  }
  return "?";
}

std::vector<DistributionAssumption> all_assumptions(double dof) {
  return {DistributionAssumption::deterministic(),      DistributionAssumption::normal(),
          DistributionAssumption::student_t(dof),       DistributionAssumption::symmetric_unimodal(),
          DistributionAssumption::unimodal(),           DistributionAssumption::mean_covariance()};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
  return p < 0.5 ? -normal_upper_quantile(p) : normal_upper_quantile(1.0 - p);
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta needs x in [0, 1]");
  return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double student_t_upper_tail(double t, double dof) {
  if (!(dof > 0.0)) throw DomainError("student-t degrees of freedom must be positive");
  if (t < 0.0) return 1.0 - student_t_upper_tail(-t, dof);
  const double t2 = t * t;
  const double x = dof / (dof + t2);
  const double y = t2 / (dof + t2);
  return 0.5 * incomplete_beta_xy(0.5 * dof, 0.5, x, y);
}

double student_t_cdf(double t, double dof) {
  if (t > 0.0) return 1.0 - student_t_upper_tail(t, dof);
  return student_t_upper_tail(-t, dof);
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("student-t quantile needs p in (0, 1)");
  if (!(dof > 0.0)) throw DomainError("student-t degrees of freedom must be positive");
  return p < 0.5 ? -student_t_upper_quantile(p, dof) : student_t_upper_quantile(1.0 - p, dof);
}

double f_inv(const DistributionAssumption& assumption, double eps) {
  check_eps(eps);
  double value = 0.0;
  switch (assumption.kind()) {
    case AssumptionKind::kDeterministic:
      value = 0.0;
      break;
    case AssumptionKind::kNormal:
      value = eps < 0.5 ? normal_upper_quantile(eps) : 0.0;
      break;
    case AssumptionKind::kStudentT: {
      const double nu = assumption.dof();
      // Unit-variance scaling: a t variate with scale s has variance s^2 nu / (nu - 2).
      value = std::sqrt((nu - 2.0) / nu) * student_t_upper_quantile(eps, nu);
      break;
    }
    case AssumptionKind::kSymmetricUnimodal:
      if (eps <= kSixth) value = std::sqrt(2.0 / (9.0 * eps));
      else if (eps < 0.5) value = std::sqrt(3.0) * (1.0 - 2.0 * eps);
      else value = 0.0;
      break;
    case AssumptionKind::kUnimodal:
      if (eps <= kSixth) value = std::sqrt(4.0 / (9.0 * eps) - 1.0);
      else value = std::sqrt(3.0 * (1.0 - eps) / (1.0 + 3.0 * eps));
      break;
    case AssumptionKind::kMeanCovariance:
      value = std::sqrt((1.0 - eps) / eps);
      break;
  }
  return std::max(0.0, value);
}

UncertaintyMargin margin_with_quantile(const Eigen::RowVectorXd& sensitivity,
                                       const ForecastModel& model, double quantile) {
  if (sensitivity.size() != model.mu.size() || model.sigma_sqrt.rows() != model.mu.size()) {
    throw DimensionError("sensitivity row has length " + std::to_string(sensitivity.size()) +
                         ", forecast model has dimension " + std::to_string(model.mu.size()));
  }
  UncertaintyMargin m;
  m.shift = sensitivity.dot(model.mu);
  m.spread = (sensitivity * model.sigma_sqrt).norm();
  m.quantile = quantile;
  m.total = m.shift + quantile * m.spread;
  return m;
}

UncertaintyMargin margin(const Eigen::RowVectorXd& sensitivity, const ForecastModel& model,
                         const DistributionAssumption& assumption, double eps) {
  return margin_with_quantile(sensitivity, model, f_inv(assumption, eps));
}

}  // namespace pscopf
