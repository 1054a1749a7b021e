#include "pscopf/cli.hpp"

#include "pscopf/dc_network.hpp"
#include "pscopf/errors.hpp"
#include "pscopf/report.hpp"
#include "pscopf/scopf.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <new>
#include <sstream>

namespace pscopf::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSampleStream = 0x9E3779B97F4A7C15ULL;

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError("invalid number '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

template <class Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream buf;
  writer(buf);
  write_text(path, buf.str());
}

fs::path prepare_output(const RunConfig& config) {
  fs::path dir(config.output_dir.empty() ? "." : config.output_dir);
  fs::create_directories(dir);
  return dir;
}

int exit_code(LpStatus status) { return status == LpStatus::kOptimal ? kOk : kInfeasible; }

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    log << "error: parse: " << e.what() << '\n';
    return kInputError;
  } catch (const SolverFailure& e) {
    log << "error: solver: " << e.what() << '\n';
    return kSolverError;
  } catch (const NumericalError& e) {
    log << "error: numerical: " << e.what() << '\n';
    return kSolverError;
  } catch (const DomainError& e) {
    log << "error: domain: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    log << "error: config: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    log << "error: filesystem: " << e.what() << '\n';
    return kInputError;
  } catch (const std::bad_alloc&) {
    log << "error: out of memory\n";
    return kInternalError;
  } catch (const std::exception& e) {
    log << "error: internal: " << e.what() << '\n';
    return kInternalError;
  }
}

struct Prepared {
  NetworkCase network;
  ContingencySet contingencies;
  DistributionAssumption assumption = DistributionAssumption::deterministic();
  Uncertainty uncertainty;
};

Prepared prepare(const RunConfig& config, std::ostream& log, bool needs_samples) {
  check(config, true);
  Prepared p;
  p.network = read_case_file(config.case_path);
  p.assumption = DistributionAssumption::parse(config.assumption, config.dof);
  const bool has_uncertainty = config.samples_path || config.synthetic;
  if (!has_uncertainty && (needs_samples || p.assumption.kind() != AssumptionKind::kDeterministic)) {
    throw ValidationError("this run needs forecast errors: pass --samples or --synthetic");
  }
  p.uncertainty = load_uncertainty(p.network, config);
  p.contingencies = enumerate_contingencies(p.network);
  for (const auto& e : p.contingencies.excluded) {
    log << "warning: contingency " << describe(p.network, e.contingency) << " excluded: " << e.reason
        << '\n';
  }
  return p;
}

struct SolveOutcome {
  ScopfProblem problem;
  ScopfSolution solution;
};

SolveOutcome solve_and_report(const RunConfig& config, const Prepared& p, const fs::path& dir,
                              std::ostream& log) {
  SolveOutcome o;
  o.problem = assemble(p.network, p.contingencies, p.uncertainty.model, p.assumption, config.eps);
  o.solution = solve(o.problem);
  write_text(dir / "solution.json", solution_json(o.problem, o.solution).dump(2) + "\n");
  write_with(dir / "constraints.csv",
             [&](std::ostream& out) { write_constraints_csv(out, o.problem, o.solution); });
  if (config.export_lp) {
    std::vector<std::string> names;
    for (std::size_t g = 0; g < p.network.generator_count(); ++g) names.push_back("pg" + std::to_string(g));
    write_text(dir / "problem.lp", to_lp_format(o.problem.to_linear_program(), names));
  }
  if (config.dump_matrices) {
    const auto matrices = dir / "matrices";
    fs::create_directories(matrices);
    dump_flow_matrices(p.network, p.contingencies, matrices.string());
  }
  for (const auto& d : o.solution.diagnostics) log << "diagnostic: " << d << '\n';
  if (o.solution.status == LpStatus::kOptimal) {
    log << "optimal: objective " << format_number(o.solution.objective) << ", "
        << o.solution.binding.size() << " binding of " << o.problem.records.size() << " constraints\n";
  } else {
    log << to_string(o.solution.status) << '\n';
  }
  return o;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

SyntheticConfig parse_synthetic(std::string_view text) {
  SyntheticConfig spec;
  bool has_family = false;
  for (const auto part : split(text, ',')) {
    const auto item = trim(part);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("synthetic spec entry '" + std::string(item) + "' is not key=value");
    }
    const auto key = trim(item.substr(0, eq));
    const auto value = trim(item.substr(eq + 1));
    if (key == "family") {
      spec.family = parse_sample_family(value);
      has_family = true;
    } else if (key == "count") {
      const double c = parse_double(value, "count");
      if (!(c >= 1.0) || c != std::floor(c)) throw DomainError("synthetic count must be a positive integer");
      spec.count = static_cast<std::size_t>(c);
    } else if (key == "dof") {
      spec.dof = parse_double(value, "dof");
    } else if (key == "std") {
      spec.std_fraction = parse_double(value, "std");
    } else {
      throw ValidationError("unknown synthetic spec key '" + std::string(key) + "'");
    }
  }
  if (!has_family) throw ValidationError("synthetic spec needs family=...");
  return spec;
}

std::string to_string(const SyntheticConfig& spec) {
  std::string s = "family=" + to_string(spec.family) + ",count=" + std::to_string(spec.count);
  if (spec.dof) s += ",dof=" + format_number(*spec.dof);
  s += ",std=" + format_number(spec.std_fraction);
  return s;
}

void check(const RunConfig& config, bool needs_case) {
  if (needs_case && config.case_path.empty()) throw ValidationError("--case is required");
  if (!(config.eps > 0.0 && config.eps < 1.0)) {
    throw DomainError("eps must lie in (0, 1), got " + format_number(config.eps));
  }
  if (!(config.dof > 2.0)) throw DomainError("dof must exceed 2, got " + format_number(config.dof));
  if (config.samples_path && config.synthetic) {
    throw ValidationError("pass either --samples or --synthetic, not both");
  }
  if (config.synthetic) {
    if (!(config.synthetic->std_fraction >= 0.0)) throw DomainError("synthetic std must be nonnegative");
    if (config.synthetic->dof && !(*config.synthetic->dof > 2.0)) {
      throw DomainError("synthetic dof must exceed 2");
    }
  }
  DistributionAssumption::parse(config.assumption, config.dof);
}

void apply_json(RunConfig& config, std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "case") config.case_path = value.get<std::string>();
    else if (key == "samples") config.samples_path = value.get<std::string>();
    else if (key == "synthetic") config.synthetic = parse_synthetic(value.get<std::string>());
    else if (key == "assumption") config.assumption = value.get<std::string>();
    else if (key == "eps") config.eps = value.get<double>();
    else if (key == "dof") config.dof = value.get<double>();
    else if (key == "seed") config.seed = value.get<std::uint64_t>();
    else if (key == "out") config.output_dir = value.get<std::string>();
    else if (key == "export_lp") config.export_lp = value.get<bool>();
    else if (key == "dump_matrices") config.dump_matrices = value.get<bool>();
    else if (key == "eps_list") config.eps_list = value.get<std::vector<double>>();
    else throw ValidationError("unknown config key '" + key + "'");
  }
}

Uncertainty load_uncertainty(const NetworkCase& network, const RunConfig& config) {
  Uncertainty u;
  if (config.samples_path) {
    const auto per_site = read_samples_file(*config.samples_path, network.uncertain_buses.size());
    u.model = model_from_samples(network, per_site);
    u.samples = expand_samples(network, per_site);
  } else if (config.synthetic) {
    const auto& s = *config.synthetic;
    u.model = synthetic_forecast_model(network, s.std_fraction, config.seed);
    SynthesisSpec spec;
    spec.family = s.family;
    spec.dof = s.dof.value_or(config.dof);
    spec.count = s.count;
    spec.seed = config.seed ^ kSampleStream;
    u.samples = synthesize_samples(u.model, spec);
  } else {
    u.model = zero_forecast_model(network);
  }
  return u;
}

int cmd_solve(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const auto p = prepare(config, log, false);
    const auto dir = prepare_output(config);
    return exit_code(solve_and_report(config, p, dir, log).solution.status);
  });
}

int cmd_validate(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const auto p = prepare(config, log, true);
    const auto dir = prepare_output(config);
    const auto o = solve_and_report(config, p, dir, log);
    if (o.solution.status != LpStatus::kOptimal) return exit_code(o.solution.status);

    const auto report = empirical_violations(o.problem, o.solution, p.uncertainty.samples);
    write_with(dir / "violations.csv",
               [&](std::ostream& out) { write_violations_csv(out, o.problem, report); });
    auto summary = violation_summary_json(report, config.eps);
    summary["assumption"] = p.assumption.name();
    summary["objective"] = o.solution.objective;
    write_text(dir / "validation.json", summary.dump(2) + "\n");
    log << "replayed " << report.samples_used << " samples: eps_avg_active "
        << format_number(report.eps_avg_active) << ", eps_max " << format_number(report.eps_max) << '\n';

    const auto s = static_cast<double>(p.uncertainty.samples.rows());
    if (s * config.eps >= 1.0) {
      std::vector<MarginComparison> rows;
      for (const auto k : o.solution.binding_index) {
        if (o.problem.records[k].is_flow()) {
          rows.push_back(compare_margins(o.problem, k, p.uncertainty.model, p.uncertainty.samples,
                                         config.eps, config.dof));
        }
      }
      write_with(dir / "margins_empirical.csv",
                 [&](std::ostream& out) { write_margin_comparison_csv(out, o.problem, rows); });
    } else {
      log << "note: too few samples for empirical margins at this eps\n";
    }
    return kOk;
  });
}

int cmd_compare(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const auto p = prepare(config, log, true);
    const auto dir = prepare_output(config);
    const auto rows = compare_assumptions(p.network, p.contingencies, p.uncertainty.model, config.eps,
                                          p.uncertainty.samples, config.dof);
    write_with(dir / "comparison.csv", [&](std::ostream& out) { write_comparison_csv(out, rows); });
    for (const auto& r : rows) {
      log << r.assumption.name() << ": " << to_string(r.status);
      if (r.status == LpStatus::kOptimal) {
        log << ", cost " << format_number(r.normalized_cost) << ", eps_avg "
            << format_number(r.eps_avg_active);
      }
      log << '\n';
    }
    return kOk;
  });
}

int cmd_margins(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    check(config, false);
    std::vector<double> eps = config.eps_list;
    if (eps.empty()) eps = {0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001};
    for (const double e : eps) {
      if (!(e > 0.0 && e < 1.0)) throw DomainError("eps must lie in (0, 1), got " + format_number(e));
    }
    const auto dir = prepare_output(config);
    write_with(dir / "margins.csv",
               [&](std::ostream& out) { write_quantile_grid_csv(out, eps, config.dof); });
    log << "wrote " << (dir / "margins.csv").string() << '\n';
    return kOk;
  });
}

int cmd_convert(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    if (config.input_path.empty() || config.output_path.empty()) {
      throw ValidationError("convert needs --input and --output");
    }
    const auto network = import_matpower(read_text(config.input_path), config.import);
    write_text(config.output_path, serialize_case(network));
    log << "converted " << network.bus_count() << " buses, " << network.line_count() << " lines, "
        << network.generator_count() << " generators\n";
    return kOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
  CLI::App app{"Probabilistic security-constrained DC optimal power flow"};
  app.require_subcommand(1);

  RunConfig flags;
  std::string samples;
  std::string synthetic;
  std::string config_path;
  std::vector<std::function<void(RunConfig&)>> overrides;

  auto bind = [&](CLI::App* sub, const std::string& name, auto member, const std::string& help) {
    auto* opt = sub->add_option(name, flags.*member, help);
    overrides.push_back([opt, member, &flags](RunConfig& c) {
      if (opt->count() > 0) c.*member = flags.*member;
    });
  };
  auto bind_flag = [&](CLI::App* sub, const std::string& name, bool RunConfig::*member,
                       const std::string& help) {
    auto* opt = sub->add_flag(name, flags.*member, help);
    overrides.push_back([opt, member](RunConfig& c) {
      if (opt->count() > 0) c.*member = true;
    });
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override it");
    bind(sub, "--eps", &RunConfig::eps, "accepted violation probability");
    bind(sub, "--dof", &RunConfig::dof, "Student-t degrees of freedom");
    bind(sub, "--out", &RunConfig::output_dir, "output directory");
  };
  auto problem_flags = [&](CLI::App* sub) {
    common(sub);
    bind(sub, "--case", &RunConfig::case_path, "case file");
    auto* s = sub->add_option("--samples", samples, "historical forecast errors (CSV, MW)");
    overrides.push_back([s, &samples](RunConfig& c) {
      if (s->count() > 0) c.samples_path = samples;
    });
    auto* y = sub->add_option("--synthetic", synthetic, "family=...,count=...[,dof=...][,std=...]");
    overrides.push_back([y, &synthetic](RunConfig& c) {
      if (y->count() > 0) c.synthetic = parse_synthetic(synthetic);
    });
    bind(sub, "--seed", &RunConfig::seed, "random seed");
  };

  auto* solve_cmd = app.add_subcommand("solve", "solve one pSCOPF");
  problem_flags(solve_cmd);
  bind(solve_cmd, "--assumption", &RunConfig::assumption, "distribution assumption");
  bind_flag(solve_cmd, "--export-lp", &RunConfig::export_lp, "write problem.lp");
  bind_flag(solve_cmd, "--dump-matrices", &RunConfig::dump_matrices, "write flow matrices");

  auto* validate_cmd = app.add_subcommand("validate", "solve and replay forecast errors");
  problem_flags(validate_cmd);
  bind(validate_cmd, "--assumption", &RunConfig::assumption, "distribution assumption");
  bind_flag(validate_cmd, "--export-lp", &RunConfig::export_lp, "write problem.lp");
  bind_flag(validate_cmd, "--dump-matrices", &RunConfig::dump_matrices, "write flow matrices");

  auto* compare_cmd = app.add_subcommand("compare", "compare all assumptions");
  problem_flags(compare_cmd);

  auto* margins_cmd = app.add_subcommand("margins", "tabulate f^-1(1 - eps)");
  common(margins_cmd);
  bind(margins_cmd, "--eps-list", &RunConfig::eps_list, "eps values");

  auto* convert_cmd = app.add_subcommand("convert", "import a MATPOWER case");
  convert_cmd->add_option("--input", flags.input_path, "MATPOWER .m file")->required();
  convert_cmd->add_option("--output", flags.output_path, "case file to write")->required();
  convert_cmd->add_option("--limit", flags.import.default_limit, "rating for unrated branches (MW)");
  convert_cmd->add_option("--limit-scale", flags.import.limit_scale, "scale applied to every rating");
  convert_cmd->add_flag("--zero-pmin", flags.import.zero_pmin, "set every generator minimum to 0");
  convert_cmd->add_flag("--uncertain-loads", flags.import.uncertain_loads,
                        "mark every loaded bus as an uncertain infeed site");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  }

  if (convert_cmd->parsed()) return cmd_convert(flags, log);

  RunConfig config;
  const int loaded = guarded(log, [&] {
    if (!config_path.empty()) apply_json(config, read_text(config_path));
    for (const auto& apply : overrides) apply(config);
    return kOk;
  });
  if (loaded != kOk) return loaded;

  if (solve_cmd->parsed()) return cmd_solve(config, log);
  if (validate_cmd->parsed()) return cmd_validate(config, log);
  if (compare_cmd->parsed()) return cmd_compare(config, log);
  return cmd_margins(config, log);
}

}  // namespace pscopf::cli
