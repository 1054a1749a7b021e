#include "pscopf/dc_network.hpp"

#include "pscopf/errors.hpp"
#include "pscopf/units.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace pscopf {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

bool line_in_service(const Contingency& outage, std::size_t l) {
  return !(outage.kind == ContingencyKind::kLineOutage && outage.element == l);
}

// Component label per bus over the in-service lines.
std::vector<std::size_t> components(const NetworkCase& network, const Contingency& outage) {
  std::vector<std::size_t> parent(network.bus_count());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t l = 0; l < network.line_count(); ++l) {
    if (!line_in_service(outage, l)) continue;
    const auto a = find(network.lines[l].from);
    const auto b = find(network.lines[l].to);
    if (a != b) parent[a] = b;
  }
  std::vector<std::size_t> label(network.bus_count());
  for (std::size_t b = 0; b < label.size(); ++b) label[b] = find(b);
  return label;
}

void check_connected(const NetworkCase& network, const Contingency& outage) {
  const auto label = components(network, outage);
  const auto slack_label = label[network.slack()];
  std::string island;
  std::size_t count = 0;
  for (std::size_t b = 0; b < label.size(); ++b) {
    if (label[b] == slack_label) continue;
    if (count < 12) island += (count ? " " : "") + network.buses[b].id;
    ++count;
  }
  if (count > 0) {
    if (count > 12) island += " ...";
    throw IslandingError(describe(network, outage) + " islands " + std::to_string(count) +
                         " bus(es) from the slack: {" + island + "}");
  }
}

}  // namespace

std::string describe(const NetworkCase& network, const Contingency& contingency) {
  switch (contingency.kind) {
    case ContingencyKind::kBase:
      return "base";
    case ContingencyKind::kLineOutage: {
      const auto& line = network.lines.at(contingency.element);
      return "line:" + network.buses[line.from].id + "-" + network.buses[line.to].id + "#" +
             std::to_string(contingency.element);
    }
    case ContingencyKind::kGeneratorOutage:
      return "gen:" + std::to_string(contingency.element) + "@" +
             network.buses[network.generators.at(contingency.element).bus].id;
  }
  return "?";
}

Eigen::MatrixXd bus_susceptance(const NetworkCase& network, const Contingency& outage) {
  const auto n = idx(network.bus_count());
  Eigen::MatrixXd bbus = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t l = 0; l < network.line_count(); ++l) {
    if (!line_in_service(outage, l)) continue;
    const auto& line = network.lines[l];
    const double b = units::susceptance(line.reactance);
    const auto f = idx(line.from), t = idx(line.to);
    bbus(f, f) += b;
    bbus(t, t) += b;
    bbus(f, t) -= b;
    bbus(t, f) -= b;
  }
  return bbus;
}

Eigen::MatrixXd line_susceptance(const NetworkCase& network, const Contingency& outage) {
  Eigen::MatrixXd bf = Eigen::MatrixXd::Zero(idx(network.line_count()), idx(network.bus_count()));
  for (std::size_t l = 0; l < network.line_count(); ++l) {
    if (!line_in_service(outage, l)) continue;
    const auto& line = network.lines[l];
    const double b = units::susceptance(line.reactance);
    bf(idx(l), idx(line.from)) = b;
    bf(idx(l), idx(line.to)) = -b;
  }
  return bf;
}

Eigen::MatrixXd generator_incidence(const NetworkCase& network) {
  Eigen::MatrixXd c =
      Eigen::MatrixXd::Zero(idx(network.bus_count()), idx(network.generator_count()));
  for (std::size_t g = 0; g < network.generator_count(); ++g) {
    c(idx(network.generators[g].bus), idx(g)) = 1.0;
  }
  return c;
}

Eigen::MatrixXd build_flow_matrix(const NetworkCase& network, const Contingency& outage) {
  if (outage.kind == ContingencyKind::kLineOutage && outage.element >= network.line_count()) {
    throw DomainError("line outage index out of range");
  }
  check_connected(network, outage);

  const auto n = idx(network.bus_count());
  const auto reduced = n - 1;
  const Eigen::MatrixXd bf = line_susceptance(network, outage);
  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(idx(network.line_count()), n);
  if (reduced == 0) return flow;

  const Eigen::MatrixXd bred = bus_susceptance(network, outage).topLeftCorner(reduced, reduced);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bred);
  if (!lu.isInvertible()) {
    throw NumericalError(describe(network, outage) + ": reduced bus susceptance matrix is singular");
  }
  const Eigen::MatrixXd inverse = lu.inverse();
  flow.leftCols(reduced) = bf.leftCols(reduced) * inverse;
  return flow;
}

Eigen::VectorXd participation_vector(const NetworkCase& network, const Contingency& outage) {
  const auto ng = idx(network.generator_count());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(ng);
  for (Index g = 0; g < ng; ++g) {
    const bool out = outage.kind == ContingencyKind::kGeneratorOutage && idx(outage.element) == g;
    if (!out) d(g) = std::max(0.0, network.generators[static_cast<std::size_t>(g)].p_max);
  }
  const double total = d.sum();
  if (!(total > 0.0)) {
    throw NoBalancingCapacityError(describe(network, outage) +
                                   ": no balancing capacity among in-service generators");
  }
  return d / total;
}

ContingencySet enumerate_contingencies(const NetworkCase& network) {
  ContingencySet set;
  auto base_matrix =
      std::make_shared<const Eigen::MatrixXd>(build_flow_matrix(network, Contingency::base()));
  set.contingencies.push_back(Contingency::base());
  set.flow_matrices.push_back(base_matrix);
  set.participation.push_back(participation_vector(network, Contingency::base()));
  const Eigen::VectorXd base_participation = set.participation.front();

  for (std::size_t l = 0; l < network.line_count(); ++l) {
    const auto outage = Contingency::line(l);
    try {
      auto matrix = std::make_shared<const Eigen::MatrixXd>(build_flow_matrix(network, outage));
      set.contingencies.push_back(outage);
      set.flow_matrices.push_back(std::move(matrix));
      set.participation.push_back(base_participation);
    } catch (const IslandingError& e) {
      set.excluded.push_back({outage, e.what()});
    }
  }
  for (std::size_t g = 0; g < network.generator_count(); ++g) {
    const auto outage = Contingency::generator(g);
    try {
      set.participation.push_back(participation_vector(network, outage));
      set.contingencies.push_back(outage);
      set.flow_matrices.push_back(base_matrix);
    } catch (const NoBalancingCapacityError& e) {
      set.excluded.push_back({outage, e.what()});
    }
  }
  return set;
}

void dump_flow_matrices(const NetworkCase& network, const ContingencySet& set,
                        const std::string& directory) {
  std::filesystem::create_directories(directory);
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::ostringstream name;
    name << "A_" << std::setw(4) << std::setfill('0') << i << ".csv";
    std::ofstream out(std::filesystem::path(directory) / name.str());
    if (!out) throw Error("cannot write matrix dump to '" + directory + "'");
    out << "# " << describe(network, set.contingencies[i]) << "\n";
    out << std::setprecision(17);
    const auto& a = set.flow_matrix(i);
    for (Index r = 0; r < a.rows(); ++r) {
      for (Index c = 0; c < a.cols(); ++c) out << (c ? "," : "") << a(r, c);
      out << "\n";
    }
  }
}

}  // namespace pscopf
