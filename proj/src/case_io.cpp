#include "pscopf/case_io.hpp"

#include "pscopf/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace pscopf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool try_parse_double(const std::string& token, double& value) {
  if (token.empty()) return false;
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  value = std::strtod(begin, &end);
  return end == begin + token.size() && errno != ERANGE && std::isfinite(value);
}

double parse_number(const std::string& token, std::size_t line) {
  double value = 0.0;
  if (!try_parse_double(token, value)) {
    throw ParseError(line, "expected a number, got '" + token + "'");
  }
  return value;
}

struct RawRow {
  std::size_t line;
  std::vector<std::string> fields;
};

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::size_t NetworkCase::bus_index(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  throw ValidationError("unknown bus '" + std::string(id) + "'");
}

void validate_case(const NetworkCase& network) {
  const std::size_t n = network.bus_count();
  if (n == 0) throw ValidationError("case has no buses");
  if (!(network.base_mva > 0.0)) throw ValidationError("base_mva must be positive");

  std::size_t slacks = 0;
  for (const auto& bus : network.buses) slacks += bus.is_slack ? 1 : 0;
  if (slacks != 1) {
    throw ValidationError("exactly one slack bus required, found " +
                          std::to_string(slacks));
  }
  if (!network.buses.back().is_slack) {
    throw ValidationError("slack bus must be stored last");
  }

  for (std::size_t l = 0; l < network.lines.size(); ++l) {
    const auto& line = network.lines[l];
    if (line.from >= n || line.to >= n) {
      throw ValidationError("line " + std::to_string(l) + " references an undeclared bus");
    }
    if (line.from == line.to) {
      throw ValidationError("line " + std::to_string(l) + " is a self-loop");
    }
    if (!(line.reactance > 0.0)) {
      throw ValidationError("line " + std::to_string(l) + " has non-positive reactance");
    }
    if (!(line.flow_limit > 0.0)) {
      throw ValidationError("line " + std::to_string(l) + " has non-positive flow limit");
    }
  }
  for (std::size_t g = 0; g < network.generators.size(); ++g) {
    const auto& gen = network.generators[g];
    if (gen.bus >= n) {
      throw ValidationError("generator " + std::to_string(g) + " references an undeclared bus");
    }
    if (!(gen.p_min <= gen.p_max)) {
      throw ValidationError("generator " + std::to_string(g) + " has p_min > p_max");
    }
  }
  if (static_cast<std::size_t>(network.loads.size()) != n ||
      static_cast<std::size_t>(network.forecast_infeeds.size()) != n) {
    throw ValidationError("load and in-feed vectors must be dense over buses");
  }
  std::vector<bool> seen(n, false);
  for (auto b : network.uncertain_buses) {
    if (b >= n) throw ValidationError("uncertain in-feed at undeclared bus");
    if (seen[b]) throw ValidationError("duplicate uncertain in-feed at bus '" + network.buses[b].id + "'");
    seen[b] = true;
  }
}

NetworkCase parse_case(std::istream& in) {
  enum class Section { kNone, kBus, kLine, kGen, kLoad, kInfeed };
  Section section = Section::kNone;
  double base_mva = 100.0;
  std::vector<RawRow> bus_rows, line_rows, gen_rows, load_rows, infeed_rows;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(line_no, "unterminated section header");
      const auto name = trim(text.substr(1, text.size() - 2));
      if (name == "bus") section = Section::kBus;
      else if (name == "line") section = Section::kLine;
      else if (name == "gen") section = Section::kGen;
      else if (name == "load") section = Section::kLoad;
      else if (name == "infeed") section = Section::kInfeed;
      else throw ParseError(line_no, "unknown section '" + std::string(name) + "'");
      continue;
    }

    auto fields = split_ws(text);
    if (section == Section::kNone) {
      if (fields.size() == 2 && fields[0] == "base_mva") {
        base_mva = parse_number(fields[1], line_no);
        continue;
      }
      throw ParseError(line_no, "row outside of any section");
    }

    auto expect = [&](std::size_t count) {
      if (fields.size() != count) {
        throw ParseError(line_no, "expected " + std::to_string(count) + " fields, got " +
                                      std::to_string(fields.size()));
      }
    };
    switch (section) {
      case Section::kBus:
        if (fields.size() == 2 && fields[1] != "slack") {
          throw ParseError(line_no, "unexpected token '" + fields[1] + "' (only 'slack' allowed)");
        }
        if (fields.size() > 2) throw ParseError(line_no, "too many fields in bus row");
        bus_rows.push_back({line_no, std::move(fields)});
        break;
      case Section::kLine:
        expect(4);
        line_rows.push_back({line_no, std::move(fields)});
        break;
      case Section::kGen:
        expect(4);
        gen_rows.push_back({line_no, std::move(fields)});
        break;
      case Section::kLoad:
        expect(2);
        load_rows.push_back({line_no, std::move(fields)});
        break;
      case Section::kInfeed:
        expect(2);
        infeed_rows.push_back({line_no, std::move(fields)});
        break;
      case Section::kNone:
        break;
    }
  }

  NetworkCase network;
  network.base_mva = base_mva;

  std::size_t slack_count = 0;
  std::optional<Bus> slack;
  std::map<std::string, bool> declared;
  for (const auto& row : bus_rows) {
    Bus bus{row.fields[0], row.fields.size() == 2};
    if (declared.count(bus.id)) throw ParseError(row.line, "duplicate bus '" + bus.id + "'");
    declared[bus.id] = true;
    if (bus.is_slack) {
      ++slack_count;
      slack = bus;
    } else {
      network.buses.push_back(bus);
    }
  }
  if (slack_count != 1) {
    throw ValidationError("exactly one slack bus required, found " + std::to_string(slack_count));
  }
  network.buses.push_back(*slack);

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < network.buses.size(); ++i) index[network.buses[i].id] = i;
  auto resolve = [&](const RawRow& row, const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw ValidationError("line " + std::to_string(row.line) + ": undeclared bus '" + id + "'");
    }
    return it->second;
  };

  for (const auto& row : line_rows) {
    Line line{resolve(row, row.fields[0]), resolve(row, row.fields[1]),
              parse_number(row.fields[2], row.line), parse_number(row.fields[3], row.line)};
    network.lines.push_back(line);
  }
  for (const auto& row : gen_rows) {
    Generator gen{resolve(row, row.fields[0]), parse_number(row.fields[1], row.line),
                  parse_number(row.fields[2], row.line), parse_number(row.fields[3], row.line)};
    network.generators.push_back(gen);
  }

  const auto n = static_cast<Eigen::Index>(network.buses.size());
  network.loads = Eigen::VectorXd::Zero(n);
  network.forecast_infeeds = Eigen::VectorXd::Zero(n);
  for (const auto& row : load_rows) {
    network.loads(static_cast<Eigen::Index>(resolve(row, row.fields[0]))) +=
        parse_number(row.fields[1], row.line);
  }
  for (const auto& row : infeed_rows) {
    const auto b = resolve(row, row.fields[0]);
    if (std::find(network.uncertain_buses.begin(), network.uncertain_buses.end(), b) !=
        network.uncertain_buses.end()) {
      throw ValidationError("line " + std::to_string(row.line) + ": duplicate in-feed at bus '" +
                            row.fields[0] + "'");
    }
    network.uncertain_buses.push_back(b);
    network.forecast_infeeds(static_cast<Eigen::Index>(b)) = parse_number(row.fields[1], row.line);
  }

  validate_case(network);
  return network;
}

NetworkCase parse_case(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_case(in);
}

NetworkCase read_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open case file '" + path + "'");
  return parse_case(in);
}

std::string serialize_case(const NetworkCase& network) {
  std::ostringstream os;
  os << "base_mva " << format_number(network.base_mva) << "\n\n[bus]\n";
  for (const auto& bus : network.buses) {
    os << bus.id << (bus.is_slack ? " slack" : "") << "\n";
  }
  os << "\n[line]\n# from to reactance_pu limit_mw\n";
  for (const auto& line : network.lines) {
    os << network.buses[line.from].id << " " << network.buses[line.to].id << " "
       << format_number(line.reactance) << " " << format_number(line.flow_limit) << "\n";
  }
  os << "\n[gen]\n# bus cost p_min p_max\n";
  for (const auto& gen : network.generators) {
    os << network.buses[gen.bus].id << " " << format_number(gen.cost) << " "
       << format_number(gen.p_min) << " " << format_number(gen.p_max) << "\n";
  }
  os << "\n[load]\n";
  for (std::size_t b = 0; b < network.buses.size(); ++b) {
    const double load = network.loads(static_cast<Eigen::Index>(b));
    if (load != 0.0) os << network.buses[b].id << " " << format_number(load) << "\n";
  }
  os << "\n[infeed]\n";
  for (auto b : network.uncertain_buses) {
    os << network.buses[b].id << " "
       << format_number(network.forecast_infeeds(static_cast<Eigen::Index>(b))) << "\n";
  }
  return os.str();
}

NetworkCase with_slack(const NetworkCase& network, std::string_view bus_id) {
  const std::size_t n = network.bus_count();
  const std::size_t new_slack = network.bus_index(bus_id);

  std::vector<std::size_t> order;  // new index -> old index
  for (std::size_t b = 0; b < n; ++b) {
    if (b != new_slack) order.push_back(b);
  }
  order.push_back(new_slack);
  std::vector<std::size_t> remap(n);
  for (std::size_t k = 0; k < n; ++k) remap[order[k]] = k;

  NetworkCase out;
  out.base_mva = network.base_mva;
  for (auto old : order) out.buses.push_back({network.buses[old].id, old == new_slack});
  for (auto line : network.lines) {
    line.from = remap[line.from];
    line.to = remap[line.to];
    out.lines.push_back(line);
  }
  for (auto gen : network.generators) {
    gen.bus = remap[gen.bus];
    out.generators.push_back(gen);
  }
  out.loads.resize(static_cast<Eigen::Index>(n));
  out.forecast_infeeds.resize(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    out.loads(static_cast<Eigen::Index>(k)) = network.loads(static_cast<Eigen::Index>(order[k]));
    out.forecast_infeeds(static_cast<Eigen::Index>(k)) =
        network.forecast_infeeds(static_cast<Eigen::Index>(order[k]));
  }
  for (auto b : network.uncertain_buses) out.uncertain_buses.push_back(remap[b]);
  validate_case(out);
  return out;
}

ForecastModel make_forecast_model(Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw DimensionError("covariance is " + std::to_string(sigma.rows()) + "x" +
                         std::to_string(sigma.cols()) + ", mean has length " +
                         std::to_string(mu.size()));
  }
  ForecastModel model;
  model.sigma_sqrt = factor_covariance(sigma);
  model.mu = std::move(mu);
  model.sigma = std::move(sigma);
  return model;
}

void check_dimensions(const NetworkCase& network, const ForecastModel& model) {
  const auto n = static_cast<Eigen::Index>(network.bus_count());
  if (model.mu.size() != n || model.sigma.rows() != n || model.sigma.cols() != n ||
      model.sigma_sqrt.rows() != n) {
    throw DimensionError("forecast model dimension " + std::to_string(model.mu.size()) +
                         " does not match bus count " + std::to_string(n));
  }
}

Eigen::MatrixXd parse_samples(std::istream& in, std::size_t columns) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::string raw;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto text = trim(raw);
    if (text.empty()) continue;

    std::vector<std::string> tokens;
    std::string token;
    std::istringstream ss{std::string(text)};
    while (std::getline(ss, token, ',')) tokens.emplace_back(trim(token));

    std::vector<double> row;
    row.reserve(tokens.size());
    bool numeric = true;
    for (const auto& t : tokens) {
      double v = 0.0;
      if (!try_parse_double(t, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first_content) {  // header
        first_content = false;
        continue;
      }
      for (const auto& t : tokens) parse_number(t, line_no);
    }
    first_content = false;
    if (row.size() != columns) {
      throw DimensionError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(columns) + " columns, got " +
                           std::to_string(row.size()));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows < 2) {
    throw InsufficientDataError("sample file needs at least 2 rows, got " + std::to_string(rows));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * columns + c];
    }
  }
  return out;
}

Eigen::MatrixXd parse_samples(std::string_view text, std::size_t columns) {
  std::istringstream in{std::string(text)};
  return parse_samples(in, columns);
}

Eigen::MatrixXd read_samples_file(const std::string& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open sample file '" + path + "'");
  return parse_samples(in, columns);
}

Eigen::MatrixXd expand_samples(const NetworkCase& network, const Eigen::MatrixXd& per_site) {
  if (static_cast<std::size_t>(per_site.cols()) != network.uncertain_buses.size()) {
    throw DimensionError("samples have " + std::to_string(per_site.cols()) +
                         " columns, case declares " +
                         std::to_string(network.uncertain_buses.size()) + " uncertain in-feeds");
  }
  Eigen::MatrixXd dense =
      Eigen::MatrixXd::Zero(per_site.rows(), static_cast<Eigen::Index>(network.bus_count()));
  for (std::size_t k = 0; k < network.uncertain_buses.size(); ++k) {
    dense.col(static_cast<Eigen::Index>(network.uncertain_buses[k])) =
        per_site.col(static_cast<Eigen::Index>(k));
  }
  return dense;
}

Moments estimate_moments(const Eigen::MatrixXd& samples) {
  const auto s = samples.rows();
  if (s < 2) {
    throw InsufficientDataError("moment estimation needs at least 2 samples, got " +
                                std::to_string(s));
  }
  Moments m;
  m.mu = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - m.mu.transpose();
  m.sigma = (centered.transpose() * centered) / static_cast<double>(s - 1);
  m.sigma = 0.5 * (m.sigma + m.sigma.transpose()).eval();
  return m;
}

Eigen::MatrixXd factor_covariance(const Eigen::MatrixXd& sigma, double tolerance) {
  if (sigma.rows() != sigma.cols()) throw DimensionError("covariance must be square");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  const double magnitude = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if (sigma.size() > 0 && asym > 1e-12 * magnitude) {
    throw NotPsdError("covariance is not symmetric");
  }
  if (sigma.size() == 0) return sigma;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda(k) < -tolerance * scale) {
      throw NotPsdError("covariance has eigenvalue " + format_number(lambda(k)));
    }
    lambda(k) = std::max(0.0, lambda(k));
  }
  return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

ForecastModel model_from_samples(const NetworkCase& network, const Eigen::MatrixXd& per_site) {
  Eigen::MatrixXd dense = expand_samples(network, per_site);
  auto moments = estimate_moments(dense);
  ForecastModel model = make_forecast_model(std::move(moments.mu), std::move(moments.sigma));
  model.samples = std::move(dense);
  return model;
}

}  // namespace pscopf
