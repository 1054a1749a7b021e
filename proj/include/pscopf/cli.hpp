#pragma once

#include "pscopf/case_io.hpp"
#include "pscopf/validation.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace pscopf::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kInfeasible = 2;  // also unbounded
inline constexpr int kSolverError = 3;
inline constexpr int kInternalError = 4;

// `family=gaussian,count=10000[,dof=4][,std=0.1]`
struct SyntheticConfig {
  SampleFamily family = SampleFamily::kGaussian;
  std::size_t count = 10000;
  std::optional<double> dof;  // falls back to RunConfig::dof
  double std_fraction = 0.1;  // forecast-error standard deviation per MW of load
};

SyntheticConfig parse_synthetic(std::string_view text);
std::string to_string(const SyntheticConfig& spec);

struct RunConfig {
  std::string case_path;
  std::optional<std::string> samples_path;
  std::optional<SyntheticConfig> synthetic;
  std::string assumption = "normal";
  double eps = 0.1;
  double dof = 4.0;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  bool export_lp = false;
  bool dump_matrices = false;
  std::vector<double> eps_list;  // margins

  // convert
  std::string input_path;
  std::string output_path;
  MatpowerImportOptions import;
};

// Throws DomainError / ValidationError on inconsistent settings.
void check(const RunConfig& config, bool needs_case);

// Overwrites fields present in a JSON config object.
void apply_json(RunConfig& config, std::string_view json_text);

// Forecast model and replay samples (bus-indexed) for a run. Without samples
// or a synthetic spec the model is zero and the samples empty.
struct Uncertainty {
  ForecastModel model;
  Eigen::MatrixXd samples;
};
Uncertainty load_uncertainty(const NetworkCase& network, const RunConfig& config);

int cmd_solve(const RunConfig& config, std::ostream& log);
int cmd_validate(const RunConfig& config, std::ostream& log);
int cmd_compare(const RunConfig& config, std::ostream& log);
int cmd_margins(const RunConfig& config, std::ostream& log);
int cmd_convert(const RunConfig& config, std::ostream& log);

// Full command line, including argv[0].
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace pscopf::cli
