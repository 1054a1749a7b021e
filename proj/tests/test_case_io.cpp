#include "pscopf/case_io.hpp"
#include "pscopf/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

using namespace pscopf;

namespace {

const char* kTwoBus = R"(
# minimal case
[bus]
A
B slack
[line]
A B 0.1 100
[gen]
A 10 0 50
[load]
B 30
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(ParseCase, TwoBusCase) {
  const auto c = parse_case(std::string_view(kTwoBus));
  ASSERT_EQ(c.bus_count(), 2u);
  EXPECT_EQ(c.slack(), 1u);
  EXPECT_EQ(c.buses[1].id, "B");
  EXPECT_TRUE(c.buses[1].is_slack);
  ASSERT_EQ(c.line_count(), 1u);
  EXPECT_EQ(c.lines[0].from, 0u);
  EXPECT_EQ(c.lines[0].to, 1u);
  EXPECT_DOUBLE_EQ(c.lines[0].reactance, 0.1);
  EXPECT_DOUBLE_EQ(c.lines[0].flow_limit, 100.0);
  ASSERT_EQ(c.generator_count(), 1u);
  EXPECT_DOUBLE_EQ(c.generators[0].p_max, 50.0);
  EXPECT_DOUBLE_EQ(c.generators[0].cost, 10.0);
  EXPECT_DOUBLE_EQ(c.loads(1), 30.0);
  EXPECT_DOUBLE_EQ(c.loads(0), 0.0);
  EXPECT_DOUBLE_EQ(c.base_mva, 100.0);
}

TEST(ParseCase, SlackIsMovedLast) {
  const auto c = parse_case(std::string_view("[bus]\nS slack\nX\nY\n[line]\nS X 0.1 10\nX Y 0.1 10\n"));
  EXPECT_EQ(c.buses.back().id, "S");
  EXPECT_EQ(c.lines[0].to, c.bus_index("X"));
  EXPECT_EQ(c.lines[0].from, c.slack());
}

TEST(ParseCase, ZeroReactanceIsRejected) {
  std::string text(kTwoBus);
  text.replace(text.find("0.1"), 3, "0");
  EXPECT_THROW(parse_case(std::string_view(text)), ValidationError);
}

TEST(ParseCase, SlackCountIsChecked) {
  EXPECT_THROW(parse_case(std::string_view("[bus]\nA\nB\n[line]\nA B 0.1 1\n")), ValidationError);
  EXPECT_THROW(parse_case(std::string_view("[bus]\nA slack\nB slack\n[line]\nA B 0.1 1\n")),
               ValidationError);
}

TEST(ParseCase, MalformedRowReportsLine) {
  try {
    parse_case(std::string_view("[bus]\nA\nB slack\n[line]\nA B 0.1 abc\n"));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
  EXPECT_THROW(parse_case(std::string_view("[bus]\nA\nB slack\n[line]\nA B 0.1\n")), ParseError);
  EXPECT_THROW(parse_case(std::string_view("[nonsense]\n")), ParseError);
}

TEST(ParseCase, UndeclaredBusIsRejected) {
  EXPECT_THROW(parse_case(std::string_view("[bus]\nA\nB slack\n[line]\nA C 0.1 1\n")), ValidationError);
}

TEST(ParseCase, InvalidGeneratorAndLimit) {
  EXPECT_THROW(parse_case(std::string_view("[bus]\nA\nB slack\n[line]\nA B 0.1 0\n")), ValidationError);
  EXPECT_THROW(parse_case(std::string_view("[bus]\nA\nB slack\n[line]\nA B 0.1 5\n[gen]\nA 1 10 5\n")),
               ValidationError);
}

TEST(ParseCase, LoadsAccumulateAndInfeedsAreUnique) {
  const auto c = parse_case(std::string_view(
      "[bus]\nA\nB slack\n[line]\nA B 0.1 5\n[load]\nA 1\nA 2.5\n[infeed]\nA 4\n"));
  EXPECT_DOUBLE_EQ(c.loads(0), 3.5);
  ASSERT_EQ(c.uncertain_buses.size(), 1u);
  EXPECT_DOUBLE_EQ(c.forecast_infeeds(0), 4.0);
  EXPECT_THROW(parse_case(std::string_view("[bus]\nA\nB slack\n[line]\nA B 0.1 5\n[infeed]\nA 4\nA 1\n")),
               ValidationError);
}

TEST(ParseCase, RoundTrip) {
  const auto c = parse_case(std::string_view(
      "base_mva 50\n[bus]\n1\n2 slack\n3\n[line]\n1 2 0.123456789 17.5\n2 3 0.2 9\n1 3 0.3 12\n"
      "[gen]\n1 10.25 1 50\n3 20 0 40\n[load]\n2 33.3333333333\n[infeed]\n3 5.5\n1 0\n"));
  const auto again = parse_case(std::string_view(serialize_case(c)));
  EXPECT_EQ(serialize_case(again), serialize_case(c));
  EXPECT_EQ(again.base_mva, c.base_mva);
  ASSERT_EQ(again.bus_count(), c.bus_count());
  for (std::size_t i = 0; i < c.bus_count(); ++i) EXPECT_EQ(again.buses[i].id, c.buses[i].id);
  for (std::size_t l = 0; l < c.line_count(); ++l) {
    EXPECT_EQ(again.lines[l].reactance, c.lines[l].reactance);
    EXPECT_EQ(again.lines[l].flow_limit, c.lines[l].flow_limit);
  }
  EXPECT_EQ(again.loads, c.loads);
  EXPECT_EQ(again.forecast_infeeds, c.forecast_infeeds);
  EXPECT_EQ(again.uncertain_buses, c.uncertain_buses);
}

TEST(ParseCase, WithSlackMovesSlack) {
  const auto c = parse_case(std::string_view(kTwoBus));
  const auto moved = with_slack(c, "A");
  EXPECT_EQ(moved.buses.back().id, "A");
  EXPECT_TRUE(moved.buses.back().is_slack);
  EXPECT_DOUBLE_EQ(moved.loads(0), 30.0);
  EXPECT_EQ(moved.generators[0].bus, 1u);
}

TEST(Case118, CountsMatchStandardData) {
  const auto c = read_case_file(std::string(PSCOPF_DATA_DIR) + "/case118.case");
  EXPECT_EQ(c.bus_count(), 118u);
  EXPECT_EQ(c.line_count(), 186u);
  EXPECT_EQ(c.generator_count(), 54u);

  const auto imported = import_matpower(read_file(std::string(PSCOPF_DATA_DIR) + "/case118.m"));
  EXPECT_EQ(imported.bus_count(), 118u);
  EXPECT_EQ(imported.line_count(), 186u);
  EXPECT_EQ(imported.generator_count(), 54u);
  EXPECT_NEAR(imported.loads.sum(), 4242.0, 1e-6);
}

TEST(ParseSamples, Basic) {
  const auto m = parse_samples(std::string_view("1,0\n-1,0\n"), 2);
  ASSERT_EQ(m.rows(), 2);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(1, 0), -1.0);
  EXPECT_EQ(m(1, 1), 0.0);
}

TEST(ParseSamples, HeaderAndErrors) {
  EXPECT_EQ(parse_samples(std::string_view("a,b\n1,2\n3,4\n"), 2).rows(), 2);
  EXPECT_THROW(parse_samples(std::string_view("1,2,3\n4,5,6\n"), 2), DimensionError);
  EXPECT_THROW(parse_samples(std::string_view("1,2\nx,4\n"), 2), ParseError);
  EXPECT_THROW(parse_samples(std::string_view("1,2\n"), 2), InsufficientDataError);
}

TEST(ParseSamples, LargeFile) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::ostringstream s;
  for (int r = 0; r < 2207; ++r) {
    for (int c = 0; c < 54; ++c) s << (c ? "," : "") << g(rng);
    s << '\n';
  }
  const auto m = parse_samples(std::string_view(s.str()), 54);
  EXPECT_EQ(m.rows(), 2207);
  EXPECT_EQ(m.cols(), 54);
}

TEST(EstimateMoments, TwoPoint) {
  Eigen::MatrixXd s(2, 2);
  s << 1, 0, -1, 0;
  const auto m = estimate_moments(s);
  EXPECT_EQ(m.mu, Eigen::Vector2d(0, 0));
  EXPECT_DOUBLE_EQ(m.sigma(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(m.sigma(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(m.sigma(1, 1), 0.0);
}

TEST(EstimateMoments, ConstantAndTooFew) {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Constant(5, 3, 2.5);
  EXPECT_TRUE(estimate_moments(s).sigma.isZero(0.0));
  EXPECT_THROW(estimate_moments(Eigen::MatrixXd::Ones(1, 3)), InsufficientDataError);
}

TEST(EstimateMoments, PermutationEquivariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd s(40, 3);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = g(rng);
  Eigen::MatrixXd p = s.colwise().reverse();
  const auto a = estimate_moments(s);
  const auto b = estimate_moments(p);
  EXPECT_LT((a.mu - b.mu).norm(), 1e-12);
  EXPECT_LT((a.sigma - b.sigma).norm(), 1e-12);
}

TEST(EstimateMoments, GaussianWithinThreeStandardErrors) {
  Eigen::Matrix3d truth;
  truth << 4, 1, 0.5, 1, 2, -0.3, 0.5, -0.3, 1;
  const Eigen::Vector3d mu(1, -2, 0.5);
  const Eigen::Matrix3d l = truth.llt().matrixL();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const int s = 100000;
  Eigen::MatrixXd x(s, 3);
  for (int r = 0; r < s; ++r) {
    const Eigen::Vector3d z(g(rng), g(rng), g(rng));
    x.row(r) = (mu + l * z).transpose();
  }
  const auto m = estimate_moments(x);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LE(std::abs(m.mu(i) - mu(i)), 3.0 * std::sqrt(truth(i, i) / s));
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((truth(i, i) * truth(j, j) + truth(i, j) * truth(i, j)) / s);
      EXPECT_LE(std::abs(m.sigma(i, j) - truth(i, j)), 3.0 * se) << i << "," << j;
    }
  }
}

TEST(FactorCovariance, Examples) {
  EXPECT_LT((factor_covariance(Eigen::Matrix3d::Identity()) *
                 factor_covariance(Eigen::Matrix3d::Identity()).transpose() -
             Eigen::Matrix3d::Identity())
                .norm(),
            1e-12);
  Eigen::Matrix2d d;
  d << 4, 0, 0, 9;
  const Eigen::MatrixXd l = factor_covariance(d);
  EXPECT_LT((l * l.transpose() - d).norm(), 1e-12);
  EXPECT_NEAR(l.rowwise().norm()(0), 2.0, 1e-12);
  EXPECT_NEAR(l.rowwise().norm()(1), 3.0, 1e-12);
}

TEST(FactorCovariance, RandomAndSingular) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(6, 6);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  const Eigen::MatrixXd sigma = a * a.transpose();
  const Eigen::MatrixXd l = factor_covariance(sigma);
  EXPECT_LT((l * l.transpose() - sigma).norm() / sigma.norm(), 1e-8);

  const Eigen::MatrixXd thin = a.leftCols(2) * a.leftCols(2).transpose();  // rank 2
  const Eigen::MatrixXd lt = factor_covariance(thin);
  EXPECT_LT((lt * lt.transpose() - thin).norm() / thin.norm(), 1e-8);
}

TEST(FactorCovariance, RejectsIndefiniteAndAsymmetric) {
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;  // eigenvalues 3, -1
  EXPECT_THROW(factor_covariance(bad), NotPsdError);
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0.2, 1;
  EXPECT_THROW(factor_covariance(asym), NotPsdError);
  Eigen::Matrix2d tiny;
  tiny << 1, 0, 0, -1e-12;
  EXPECT_NO_THROW(factor_covariance(tiny));
}

TEST(ForecastModel, DimensionsAreChecked) {
  EXPECT_THROW(make_forecast_model(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(3, 3)),
               DimensionError);
  const auto c = parse_case(std::string_view(kTwoBus));
  EXPECT_THROW(check_dimensions(c, make_forecast_model(Eigen::VectorXd::Zero(3),
                                                       Eigen::MatrixXd::Identity(3, 3))),
               DimensionError);
}

TEST(ForecastModel, SamplesExpandToBuses) {
  const auto c = parse_case(std::string_view(
      "[bus]\nA\nB\nC slack\n[line]\nA B 0.1 5\nB C 0.1 5\n[infeed]\nC 0\nA 0\n"));
  Eigen::MatrixXd per_site(3, 2);
  per_site << 1, 10, 2, 20, 3, 30;
  const auto dense = expand_samples(c, per_site);
  EXPECT_EQ(dense.col(2), per_site.col(0));
  EXPECT_EQ(dense.col(0), per_site.col(1));
  EXPECT_TRUE(dense.col(1).isZero(0.0));
  const auto model = model_from_samples(c, per_site);
  EXPECT_DOUBLE_EQ(model.mu(0), 20.0);
  EXPECT_DOUBLE_EQ(model.sigma(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(model.sigma(1, 1), 0.0);
}
