#pragma once

// Reference implementations used only by the tests. None of them call into
// the library's numerical routines.

#include "pscopf/case_io.hpp"
#include "pscopf/lp.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

// x with upper_tail(x) = eps, for a decreasing tail function, by bisection.
inline double bisect_upper(const std::function<double(double)>& upper_tail, double eps) {
  double lo = -60.0;
  double hi = 60.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (upper_tail(mid) > eps) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double normal_upper_quantile(double eps) {
  const boost::math::normal_distribution<double> n;
  return bisect_upper([&](double x) { return boost::math::cdf(boost::math::complement(n, x)); }, eps);
}

inline double student_upper_quantile(double eps, double nu) {
  const boost::math::students_t_distribution<double> t(nu);
  return bisect_upper([&](double x) { return boost::math::cdf(boost::math::complement(t, x)); }, eps);
}

// Standardized f^-1(1 - eps) per class, clamped at zero.
inline double f_normal(double eps) { return std::max(0.0, normal_upper_quantile(eps)); }
inline double f_student(double eps, double nu) {
  return std::max(0.0, std::sqrt((nu - 2.0) / nu) * student_upper_quantile(eps, nu));
}
inline double f_symmetric_unimodal(double eps) {
  if (eps <= 1.0 / 6.0) return std::sqrt(2.0 / (9.0 * eps));
  return std::max(0.0, std::sqrt(3.0) * (1.0 - 2.0 * eps));
}
inline double f_unimodal(double eps) {
  if (eps <= 1.0 / 6.0) return std::sqrt(4.0 / (9.0 * eps) - 1.0);
  return std::sqrt(3.0 * (1.0 - eps) / (1.0 + 3.0 * eps));
}
inline double f_mean_covariance(double eps) { return std::sqrt((1.0 - eps) / eps); }

// Brute-force LP: every basic solution formed by the equality rows plus a
// subset of inequality rows (and finite variable bounds) taken as equalities.
struct VertexResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
};

inline VertexResult vertex_enumeration(const pscopf::LinearProgram& lp, double tol = 1e-7) {
  const auto n = lp.objective.size();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  std::vector<int> kind;  // 0 equality, +1 <=, -1 >=
  for (Eigen::Index r = 0; r < lp.rows.rows(); ++r) {
    rows.push_back(lp.rows.row(r));
    rhs.push_back(lp.rhs(r));
    kind.push_back(lp.sense[static_cast<std::size_t>(r)] == pscopf::RowSense::kEqual ? 0
                   : lp.sense[static_cast<std::size_t>(r)] == pscopf::RowSense::kLessEqual ? 1
                                                                                          : -1);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
    e(j) = 1.0;
    if (std::isfinite(lp.lower(j))) { rows.push_back(e); rhs.push_back(lp.lower(j)); kind.push_back(-1); }
    if (std::isfinite(lp.upper(j))) { rows.push_back(e); rhs.push_back(lp.upper(j)); kind.push_back(1); }
  }
  std::vector<std::size_t> eq;
  std::vector<std::size_t> ineq;
  for (std::size_t k = 0; k < rows.size(); ++k) (kind[k] == 0 ? eq : ineq).push_back(k);

  auto feasible = [&](const Eigen::VectorXd& x) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double v = rows[k].dot(x);
      const double scale = std::max(1.0, std::abs(rhs[k]));
      if (kind[k] == 0 && std::abs(v - rhs[k]) > tol * scale) return false;
      if (kind[k] == 1 && v - rhs[k] > tol * scale) return false;
      if (kind[k] == -1 && rhs[k] - v > tol * scale) return false;
    }
    return true;
  };

  VertexResult best;
  const auto need = static_cast<std::size_t>(n) - eq.size();
  std::vector<std::size_t> pick(need);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == need) {
      Eigen::MatrixXd m(n, n);
      Eigen::VectorXd b(n);
      Eigen::Index r = 0;
      for (const auto k : eq) { m.row(r) = rows[k]; b(r++) = rhs[k]; }
      for (const auto k : pick) { m.row(r) = rows[k]; b(r++) = rhs[k]; }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
      if (lu.rank() < n) return;
      const Eigen::VectorXd x = lu.solve(b);
      if (!feasible(x)) return;
      const double obj = lp.objective.dot(x);
      if (!best.feasible || obj < best.objective) {
        best.feasible = true;
        best.objective = obj;
        best.x = x;
      }
      return;
    }
    for (std::size_t i = start; i < ineq.size(); ++i) {
      pick[depth] = ineq[i];
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

// DC flows by solving B theta = P with the angle at `reference` fixed to 0;
// `skip` removes one line. Flows in per-unit for per-unit injections.
inline Eigen::VectorXd angle_flows(const pscopf::NetworkCase& c, const Eigen::VectorXd& injection,
                                   std::size_t reference, std::optional<std::size_t> skip = {}) {
  const auto n = static_cast<Eigen::Index>(c.bus_count());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t l = 0; l < c.line_count(); ++l) {
    if (skip && *skip == l) continue;
    const auto& line = c.lines[l];
    const double y = 1.0 / line.reactance;
    const auto f = static_cast<Eigen::Index>(line.from);
    const auto t = static_cast<Eigen::Index>(line.to);
    b(f, f) += y; b(t, t) += y; b(f, t) -= y; b(t, f) -= y;
  }
  const auto ref = static_cast<Eigen::Index>(reference);
  b.row(ref).setZero();
  b(ref, ref) = 1.0;
  Eigen::VectorXd p = injection;
  p(ref) = 0.0;
  const Eigen::VectorXd theta = b.partialPivLu().solve(p);
  Eigen::VectorXd flows = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.line_count()));
  for (std::size_t l = 0; l < c.line_count(); ++l) {
    if (skip && *skip == l) continue;
    const auto& line = c.lines[l];
    flows(static_cast<Eigen::Index>(l)) =
        (theta(static_cast<Eigen::Index>(line.from)) - theta(static_cast<Eigen::Index>(line.to))) /
        line.reactance;
  }
  return flows;
}

// Lines whose removal disconnects the graph, by repeated connectivity search.
inline std::vector<std::size_t> bridges(const pscopf::NetworkCase& c) {
  std::vector<std::size_t> out;
  const auto n = c.bus_count();
  for (std::size_t skip = 0; skip < c.line_count(); ++skip) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (std::size_t l = 0; l < c.line_count(); ++l) {
        if (l == skip) continue;
        const auto& line = c.lines[l];
        std::size_t v = n;
        if (line.from == u) v = line.to;
        else if (line.to == u) v = line.from;
        if (v < n && !seen[v]) { seen[v] = true; stack.push_back(v); }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) out.push_back(skip);
  }
  return out;
}

// Random connected case: spanning tree plus extra edges, one slack (last).
struct RandomCaseOptions {
  std::size_t buses = 4;
  std::size_t extra_lines = 2;
  std::size_t generators = 3;
  double limit_lo = 50.0;
  double limit_hi = 200.0;
};

inline pscopf::NetworkCase random_case(std::mt19937_64& rng, const RandomCaseOptions& o) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  pscopf::NetworkCase c;
  for (std::size_t i = 0; i < o.buses; ++i) {
    c.buses.push_back({"b" + std::to_string(i), i + 1 == o.buses});
  }
  auto add_line = [&](std::size_t a, std::size_t b) {
    c.lines.push_back({a, b, 0.05 + 0.45 * u(rng), o.limit_lo + (o.limit_hi - o.limit_lo) * u(rng)});
  };
  for (std::size_t i = 1; i < o.buses; ++i) {
    add_line(static_cast<std::size_t>(u(rng) * static_cast<double>(i)), i);
  }
  for (std::size_t k = 0; k < o.extra_lines; ++k) {
    const auto a = static_cast<std::size_t>(u(rng) * static_cast<double>(o.buses));
    auto b = static_cast<std::size_t>(u(rng) * static_cast<double>(o.buses - 1));
    if (b >= a) ++b;
    add_line(std::min(a, b), std::max(a, b));
  }
  for (std::size_t g = 0; g < o.generators; ++g) {
    const auto bus = static_cast<std::size_t>(u(rng) * static_cast<double>(o.buses));
    c.generators.push_back({bus, 10.0 + 40.0 * u(rng), 0.0, 80.0 + 120.0 * u(rng)});
  }
  c.loads = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(o.buses));
  for (std::size_t i = 0; i < o.buses; ++i) c.loads(static_cast<Eigen::Index>(i)) = 10.0 + 50.0 * u(rng);
  c.forecast_infeeds = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(o.buses));
  for (std::size_t i = 0; i + 1 < o.buses; ++i) c.uncertain_buses.push_back(i);
  return c;
}

// Classical DC SCOPF in MW built from angle-based flows: base case, every
// non-bridge line outage, every generator outage with the lost output picked
// up by the others in proportion to p_max. Variables are generator outputs.
inline pscopf::LinearProgram classical_scopf(const pscopf::NetworkCase& c) {
  const auto ng = c.generator_count();
  const auto ngi = static_cast<Eigen::Index>(ng);
  const auto n = static_cast<Eigen::Index>(c.bus_count());
  const auto ref = c.bus_count() - 1;
  pscopf::LinearProgram lp(ng);
  for (std::size_t g = 0; g < ng; ++g) lp.objective(static_cast<Eigen::Index>(g)) = c.generators[g].cost;
  lp.add_row(Eigen::RowVectorXd::Ones(ngi), pscopf::RowSense::kEqual,
             c.loads.sum() - c.forecast_infeeds.sum());

  // `output`: post-contingency generator outputs as a linear map of P_G.
  // `bounded`: the quantities held within [p_min, p_max].
  auto add_case = [&](const Eigen::MatrixXd& output, const Eigen::MatrixXd& bounded,
                      std::optional<std::size_t> skip) {
    const Eigen::VectorXd fixed = angle_flows(c, c.forecast_infeeds - c.loads, ref, skip);
    Eigen::MatrixXd per_bus = Eigen::MatrixXd::Zero(n, ngi);
    for (std::size_t h = 0; h < ng; ++h) {
      per_bus.row(static_cast<Eigen::Index>(c.generators[h].bus)) += output.row(static_cast<Eigen::Index>(h));
    }
    Eigen::MatrixXd coeff(static_cast<Eigen::Index>(c.line_count()), ngi);
    for (Eigen::Index g = 0; g < ngi; ++g) coeff.col(g) = angle_flows(c, per_bus.col(g), ref, skip);
    for (std::size_t l = 0; l < c.line_count(); ++l) {
      if (skip && *skip == l) continue;
      const auto li = static_cast<Eigen::Index>(l);
      lp.add_row(coeff.row(li), pscopf::RowSense::kLessEqual, c.lines[l].flow_limit - fixed(li));
      lp.add_row(coeff.row(li), pscopf::RowSense::kGreaterEqual, -c.lines[l].flow_limit - fixed(li));
    }
    for (std::size_t h = 0; h < ng; ++h) {
      const auto hi = static_cast<Eigen::Index>(h);
      lp.add_row(bounded.row(hi), pscopf::RowSense::kLessEqual, c.generators[h].p_max);
      lp.add_row(bounded.row(hi), pscopf::RowSense::kGreaterEqual, c.generators[h].p_min);
    }
  };

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(ngi, ngi);
  add_case(identity, identity, std::nullopt);
  const auto cut = bridges(c);
  for (std::size_t l = 0; l < c.line_count(); ++l) {
    if (std::find(cut.begin(), cut.end(), l) == cut.end()) add_case(identity, identity, l);
  }
  for (std::size_t o = 0; o < ng; ++o) {
    double rest = 0.0;
    for (std::size_t h = 0; h < ng; ++h) if (h != o) rest += std::max(0.0, c.generators[h].p_max);
    if (rest <= 0.0) continue;
    const auto oi = static_cast<Eigen::Index>(o);
    Eigen::MatrixXd output = identity;
    output(oi, oi) = 0.0;
    for (std::size_t h = 0; h < ng; ++h) {
      if (h != o) output(static_cast<Eigen::Index>(h), oi) = std::max(0.0, c.generators[h].p_max) / rest;
    }
    // The outaged unit keeps its pre-contingency bounds.
    Eigen::MatrixXd bounded = output;
    bounded(oi, oi) = 1.0;
    add_case(output, bounded, std::nullopt);
  }
  return lp;
}

}  // namespace oracle
