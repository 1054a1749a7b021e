#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pscopf {

struct Bus {
  std::string id;
  bool is_slack = false;
};

// Reactance in per-unit on the case base, flow limit in MW.
struct Line {
  std::size_t from = 0;
  std::size_t to = 0;
  double reactance = 0.0;
  double flow_limit = 0.0;
};

// Linear cost in $/MWh, output limits in MW.
struct Generator {
  std::size_t bus = 0;
  double cost = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
};

// Physical system description. Bus indices are contiguous and 0-based, with
// the slack bus always stored last. `loads` and `forecast_infeeds` are dense
// over buses; `uncertain_buses` lists the buses carrying a forecast error, in
// the column order used by sample files.
struct NetworkCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  Eigen::VectorXd loads;
  Eigen::VectorXd forecast_infeeds;
  std::vector<std::size_t> uncertain_buses;

  std::size_t bus_count() const { return buses.size(); }
  std::size_t line_count() const { return lines.size(); }
  std::size_t generator_count() const { return generators.size(); }
  std::size_t slack() const { return buses.size() - 1; }

  // Throws ValidationError for an unknown id.
  std::size_t bus_index(std::string_view id) const;
};

// Checks every structural invariant (one slack stored last, positive
// reactances and limits, p_min <= p_max, endpoints in range, vector sizes).
void validate_case(const NetworkCase& network);

// Sectioned text format:
//
//   base_mva 100
//   [bus]     id [slack]
//   [line]    from to reactance_pu limit_mw
//   [gen]     bus cost p_min p_max
//   [load]    bus p_mw            (repeated rows accumulate)
//   [infeed]  bus forecast_mw     (one row per uncertain bus)
//
// `#` starts a comment. Bus ids are arbitrary tokens.
NetworkCase parse_case(std::istream& in);
NetworkCase parse_case(std::string_view text);
NetworkCase read_case_file(const std::string& path);
std::string serialize_case(const NetworkCase& network);

// Same network with a different slack bus; indices are reassigned so the new
// slack is last while all other buses keep their relative order.
NetworkCase with_slack(const NetworkCase& network, std::string_view bus_id);

// Import of the matrix-oriented MATPOWER case layout (mpc.bus, mpc.branch,
// mpc.gen, mpc.gencost). Out-of-service branches and generators are dropped.
struct MatpowerImportOptions {
  // Ratings of 0 or >= this value are treated as unlimited.
  double unlimited_rating = 9900.0;
  // Limit assigned to unlimited branches. Must be positive.
  double default_limit = 9900.0;
  // Scales every resulting branch limit.
  double limit_scale = 1.0;
  bool zero_pmin = false;
  // Register every bus with positive load as an uncertain in-feed site.
  bool uncertain_loads = false;
};
NetworkCase import_matpower(std::string_view text,
                            const MatpowerImportOptions& options = {});

struct ForecastModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd sigma_sqrt;
  std::optional<Eigen::MatrixXd> samples;

  std::size_t dimension() const { return static_cast<std::size_t>(mu.size()); }
};

// Builds a model from known moments, factoring the covariance.
ForecastModel make_forecast_model(Eigen::VectorXd mu, Eigen::MatrixXd sigma);

// Throws DimensionError when the model does not match the bus count.
void check_dimensions(const NetworkCase& network, const ForecastModel& model);

// Header-optional CSV with `columns` numbers per row. Requires >= 2 rows.
Eigen::MatrixXd parse_samples(std::istream& in, std::size_t columns);
Eigen::MatrixXd parse_samples(std::string_view text, std::size_t columns);
Eigen::MatrixXd read_samples_file(const std::string& path, std::size_t columns);

// Scatters a samples matrix with one column per uncertain bus into a dense
// bus-indexed matrix (zeros at certain buses).
Eigen::MatrixXd expand_samples(const NetworkCase& network,
                               const Eigen::MatrixXd& per_site);

struct Moments {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

// Column means and unbiased (s - 1) covariance, symmetrized.
Moments estimate_moments(const Eigen::MatrixXd& samples);

// Eigenvalue-based square-root factor L with L * L^T = sigma. Eigenvalues in
// [-tolerance * scale, 0] are clipped to zero, where scale is the largest
// eigenvalue magnitude (at least 1).
Eigen::MatrixXd factor_covariance(const Eigen::MatrixXd& sigma,
                                  double tolerance = 1e-10);

// Moments estimated from per-site samples, expanded to the bus dimension.
ForecastModel model_from_samples(const NetworkCase& network,
                                 const Eigen::MatrixXd& per_site);

}  // namespace pscopf
