#include "pscopf/lp.hpp"

#include "pscopf/errors.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace pscopf {

namespace {

using Index = Eigen::Index;
using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Original variable j = offset + sign * x'[plus] - x'[minus].
struct VariableMap {
  double offset = 0.0;
  double sign = 1.0;
  Index plus = -1;
  Index minus = -1;
};

class TableauSimplex {
 public:
  TableauSimplex(Tableau tableau, std::vector<Index> basis, Index artificial_begin,
                 const SimplexOptions& options)
      : t_(std::move(tableau)),
        basis_(std::move(basis)),
        artificial_begin_(artificial_begin),
        options_(options) {}

  Index rows() const { return t_.rows() - 1; }
  Index rhs_col() const { return t_.cols() - 1; }

  // Runs pivots until optimal or unbounded. Returns false on unboundedness.
  bool optimize(bool allow_artificial) {
    std::size_t degenerate = 0;
    bool bland = false;
    const Index limit = allow_artificial ? rhs_col() : artificial_begin_;
    for (;;) {
      if (iterations_ >= options_.max_iterations) {
        throw SolverFailure("simplex iteration limit (" + std::to_string(options_.max_iterations) +
                            ") reached with " + std::to_string(rows()) + " rows");
      }
      const Index m = rows();
      Index entering = -1;
      double best = -options_.optimality_tolerance;
      for (Index j = 0; j < limit; ++j) {
        const double d = t_(m, j);
        if (d < best) {
          entering = j;
          if (bland) break;
          best = d;
        }
      }
      if (entering < 0) return true;

      Index leaving = -1;
      double ratio = kInf;
      double pivot = 0.0;
      for (Index i = 0; i < m; ++i) {
        const double a = t_(i, entering);
        if (a <= options_.pivot_tolerance) continue;
        const double r = std::max(0.0, t_(i, rhs_col())) / a;
        const bool tie = leaving >= 0 && std::abs(r - ratio) <= 1e-12 * (1.0 + ratio);
        if (leaving < 0 || (r < ratio && !tie)) {
          leaving = i;
          ratio = r;
          pivot = a;
        } else if (tie) {
          const bool better = bland ? basis_[static_cast<std::size_t>(i)] <
                                          basis_[static_cast<std::size_t>(leaving)]
                                    : a > pivot;
          if (better) {
            leaving = i;
            ratio = std::min(ratio, r);
            pivot = a;
          }
        }
      }
      if (leaving < 0) return false;

      degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
      if (degenerate > options_.degenerate_switch) bland = true;
      pivot_on(leaving, entering);
    }
  }

  void pivot_on(Index r, Index c) {
    t_.row(r) /= t_(r, c);
    for (Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double factor = t_(i, c);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
    ++iterations_;
  }

  // Moves basic artificials out of the basis where a structural or slack
  // column can replace them; rows that cannot are redundant and keep their
  // artificial at zero.
  void drive_out_artificials() {
    for (Index r = 0; r < rows(); ++r) {
      if (basis_[static_cast<std::size_t>(r)] < artificial_begin_) continue;
      Index best = -1;
      double magnitude = options_.pivot_tolerance;
      for (Index j = 0; j < artificial_begin_; ++j) {
        if (std::abs(t_(r, j)) > magnitude) {
          magnitude = std::abs(t_(r, j));
          best = j;
        }
      }
      if (best >= 0) pivot_on(r, best);
    }
  }

  void set_objective(const Eigen::VectorXd& cost) {
    const Index m = rows();
    t_.row(m).setZero();
    t_.row(m).head(cost.size()) = cost.transpose();
    for (Index i = 0; i < m; ++i) {
      const Index b = basis_[static_cast<std::size_t>(i)];
      const double cb = b < cost.size() ? cost(b) : 0.0;
      if (cb != 0.0) t_.row(m) -= cb * t_.row(i);
    }
  }

  double objective_value() const { return -t_(rows(), rhs_col()); }

  Eigen::VectorXd basic_solution(Index columns) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(columns);
    for (Index i = 0; i < rows(); ++i) {
      const Index b = basis_[static_cast<std::size_t>(i)];
      if (b < columns) x(b) = std::max(0.0, t_(i, rhs_col()));
    }
    return x;
  }

  Tableau& tableau() { return t_; }
  std::size_t iterations() const { return iterations_; }

 private:
  Tableau t_;
  std::vector<Index> basis_;
  Index artificial_begin_;
  SimplexOptions options_;
  std::size_t iterations_ = 0;
};

}  // namespace

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "?";
}

LinearProgram::LinearProgram(std::size_t variables)
    : objective(Eigen::VectorXd::Zero(static_cast<Index>(variables))),
      rows(0, static_cast<Index>(variables)),
      rhs(0),
      lower(Eigen::VectorXd::Constant(static_cast<Index>(variables), -kInf)),
      upper(Eigen::VectorXd::Constant(static_cast<Index>(variables), kInf)) {}

void LinearProgram::add_row(const Eigen::RowVectorXd& coefficients, RowSense row_sense,
                            double value) {
  if (coefficients.size() != objective.size()) {
    throw DimensionError("row has " + std::to_string(coefficients.size()) +
                         " coefficients, program has " + std::to_string(objective.size()) +
                         " variables");
  }
  rows.conservativeResize(rows.rows() + 1, objective.size());
  rows.row(rows.rows() - 1) = coefficients;
  rhs.conservativeResize(rhs.size() + 1);
  rhs(rhs.size() - 1) = value;
  sense.push_back(row_sense);
}

LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  const Index n = lp.objective.size();
  if (lp.rows.cols() != n || lp.rows.rows() != lp.rhs.size() ||
      static_cast<std::size_t>(lp.rhs.size()) != lp.sense.size() || lp.lower.size() != n ||
      lp.upper.size() != n) {
    throw DimensionError("inconsistent linear program dimensions");
  }

  LpResult result;
  result.x = Eigen::VectorXd::Zero(n);

  // Map every variable onto nonnegative standard-form columns.
  std::vector<VariableMap> maps(static_cast<std::size_t>(n));
  std::vector<std::pair<Index, double>> bound_rows;
  Index std_cols = 0;
  for (Index j = 0; j < n; ++j) {
    auto& map = maps[static_cast<std::size_t>(j)];
    const double lo = lp.lower(j), up = lp.upper(j);
    if (lo > up) return result;
    if (std::isfinite(lo)) {
      map.offset = lo;
      map.plus = std_cols++;
      if (std::isfinite(up)) bound_rows.emplace_back(map.plus, up - lo);
    } else if (std::isfinite(up)) {
      map.offset = up;
      map.sign = -1.0;
      map.plus = std_cols++;
    } else {
      map.plus = std_cols++;
      map.minus = std_cols++;
    }
  }

  const Index m_orig = lp.rows.rows();
  const Index m_all = m_orig + static_cast<Index>(bound_rows.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m_all, std_cols);
  Eigen::VectorXd b(m_all);
  std::vector<RowSense> sense(static_cast<std::size_t>(m_all));
  for (Index i = 0; i < m_orig; ++i) {
    double value = lp.rhs(i);
    for (Index j = 0; j < n; ++j) {
      const double coef = lp.rows(i, j);
      if (coef == 0.0) continue;
      const auto& map = maps[static_cast<std::size_t>(j)];
      a(i, map.plus) += coef * map.sign;
      if (map.minus >= 0) a(i, map.minus) -= coef;
      value -= coef * map.offset;
    }
    b(i) = value;
    sense[static_cast<std::size_t>(i)] = lp.sense[static_cast<std::size_t>(i)];
  }
  for (std::size_t k = 0; k < bound_rows.size(); ++k) {
    const Index i = m_orig + static_cast<Index>(k);
    a(i, bound_rows[k].first) = 1.0;
    b(i) = bound_rows[k].second;
    sense[static_cast<std::size_t>(i)] = RowSense::kLessEqual;
  }

  // Equilibrate rows, drop empty ones, make right-hand sides nonnegative.
  std::vector<Index> kept;
  for (Index i = 0; i < m_all; ++i) {
    const double scale = a.row(i).cwiseAbs().maxCoeff();
    auto& s = sense[static_cast<std::size_t>(i)];
    if (scale == 0.0) {
      const double tol = options.feasibility_tolerance * std::max(1.0, std::abs(b(i)));
      const bool ok = (s == RowSense::kLessEqual && 0.0 <= b(i) + tol) ||
                      (s == RowSense::kGreaterEqual && 0.0 >= b(i) - tol) ||
                      (s == RowSense::kEqual && std::abs(b(i)) <= tol);
      if (!ok) return result;
      continue;
    }
    a.row(i) /= scale;
    b(i) /= scale;
    if (b(i) < 0.0) {
      a.row(i) *= -1.0;
      b(i) = -b(i);
      if (s == RowSense::kLessEqual) s = RowSense::kGreaterEqual;
      else if (s == RowSense::kGreaterEqual) s = RowSense::kLessEqual;
    }
    kept.push_back(i);
  }

  const Index m = static_cast<Index>(kept.size());
  Index slack_count = 0, artificial_count = 0;
  for (auto i : kept) {
    const auto s = sense[static_cast<std::size_t>(i)];
    if (s != RowSense::kEqual) ++slack_count;
    if (s != RowSense::kLessEqual) ++artificial_count;
  }
  const Index artificial_begin = std_cols + slack_count;
  const Index total_cols = artificial_begin + artificial_count;

  Tableau t = Tableau::Zero(m + 1, total_cols + 1);
  std::vector<Index> basis(static_cast<std::size_t>(m));
  Index next_slack = std_cols, next_artificial = artificial_begin;
  for (Index r = 0; r < m; ++r) {
    const Index i = kept[static_cast<std::size_t>(r)];
    const auto s = sense[static_cast<std::size_t>(i)];
    t.row(r).head(std_cols) = a.row(i);
    t(r, total_cols) = b(i);
    if (s == RowSense::kLessEqual) {
      t(r, next_slack) = 1.0;
      basis[static_cast<std::size_t>(r)] = next_slack++;
    } else {
      if (s == RowSense::kGreaterEqual) t(r, next_slack++) = -1.0;
      t(r, next_artificial) = 1.0;
      basis[static_cast<std::size_t>(r)] = next_artificial++;
    }
  }

  TableauSimplex simplex(std::move(t), std::move(basis), artificial_begin, options);

  if (artificial_count > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total_cols);
    phase1.tail(artificial_count).setOnes();
    simplex.set_objective(phase1);
    simplex.optimize(true);
    const double infeasibility = simplex.objective_value();
    const double scale = std::max(1.0, m > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
    if (infeasibility > options.feasibility_tolerance * scale) {
      result.iterations = simplex.iterations();
      return result;
    }
    simplex.drive_out_artificials();
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(total_cols);
  for (Index j = 0; j < n; ++j) {
    const auto& map = maps[static_cast<std::size_t>(j)];
    cost(map.plus) += lp.objective(j) * map.sign;
    if (map.minus >= 0) cost(map.minus) -= lp.objective(j);
  }
  const double cost_scale = cost.size() > 0 ? cost.cwiseAbs().maxCoeff() : 0.0;
  if (cost_scale > 0.0) cost /= cost_scale;
  simplex.set_objective(cost);
  const bool bounded = simplex.optimize(false);
  result.iterations = simplex.iterations();
  if (!bounded) {
    result.status = LpStatus::kUnbounded;
    return result;
  }

  const Eigen::VectorXd xs = simplex.basic_solution(std_cols);
  for (Index j = 0; j < n; ++j) {
    const auto& map = maps[static_cast<std::size_t>(j)];
    double v = map.offset + map.sign * xs(map.plus);
    if (map.minus >= 0) v -= xs(map.minus);
    result.x(j) = v;
  }
  result.objective = lp.objective.dot(result.x);
  result.status = LpStatus::kOptimal;
  return result;
}

std::string to_lp_format(const LinearProgram& lp, const std::vector<std::string>& variable_names,
                         const std::vector<std::string>& row_names) {
  const Index n = lp.objective.size();
  auto var = [&](Index j) {
    return static_cast<std::size_t>(j) < variable_names.size()
               ? variable_names[static_cast<std::size_t>(j)]
               : "x" + std::to_string(j);
  };
  auto row_name = [&](Index i) {
    return static_cast<std::size_t>(i) < row_names.size() ? row_names[static_cast<std::size_t>(i)]
                                                           : "r" + std::to_string(i);
  };
  std::ostringstream os;
  os << std::setprecision(17);
  auto linear = [&](const Eigen::RowVectorXd& coefs) {
    bool first = true;
    for (Index j = 0; j < n; ++j) {
      const double c = coefs(j);
      if (c == 0.0) continue;
      os << (c < 0.0 ? " - " : (first ? " " : " + ")) << std::abs(c) << " " << var(j);
      first = false;
    }
    if (first) os << " 0 " << var(0);
  };

  os << "\\ generated by pscopf\nMinimize\n obj:";
  linear(lp.objective.transpose());
  os << "\nSubject To\n";
  for (Index i = 0; i < lp.rows.rows(); ++i) {
    os << " " << row_name(i) << ":";
    linear(lp.rows.row(i));
    switch (lp.sense[static_cast<std::size_t>(i)]) {
      case RowSense::kLessEqual: os << " <= "; break;
      case RowSense::kGreaterEqual: os << " >= "; break;
      case RowSense::kEqual: os << " = "; break;
    }
    os << lp.rhs(i) << "\n";
  }
  os << "Bounds\n";
  for (Index j = 0; j < n; ++j) {
    const double lo = lp.lower(j), up = lp.upper(j);
    if (!std::isfinite(lo) && !std::isfinite(up)) {
      os << " " << var(j) << " free\n";
      continue;
    }
    os << " ";
    if (std::isfinite(lo)) os << lo; else os << "-inf";
    os << " <= " << var(j) << " <= ";
    if (std::isfinite(up)) os << up; else os << "+inf";
    os << "\n";
  }
  os << "End\n";
  return os.str();
}

}  // namespace pscopf
