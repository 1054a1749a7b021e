#pragma once

#include "pscopf/case_io.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace pscopf {

enum class ContingencyKind { kBase, kLineOutage, kGeneratorOutage };

struct Contingency {
  ContingencyKind kind = ContingencyKind::kBase;
  // Line index for line outages, generator index for generator outages.
  std::size_t element = 0;

  static Contingency base() { return {}; }
  static Contingency line(std::size_t l) { return {ContingencyKind::kLineOutage, l}; }
  static Contingency generator(std::size_t g) { return {ContingencyKind::kGeneratorOutage, g}; }

  bool operator==(const Contingency&) const = default;
};

// "base", "line:<from>-<to>#<index>" or "gen:<index>@<bus>".
std::string describe(const NetworkCase& network, const Contingency& contingency);

struct ExcludedContingency {
  Contingency contingency;
  std::string reason;
};

// Post-outage network data for every admissible single outage. Generator
// outages share the base-case flow matrix.
struct ContingencySet {
  std::vector<Contingency> contingencies;
  std::vector<std::shared_ptr<const Eigen::MatrixXd>> flow_matrices;
  // Participation over generators; sums to one.
  std::vector<Eigen::VectorXd> participation;
  std::vector<ExcludedContingency> excluded;

  std::size_t size() const { return contingencies.size(); }
  const Eigen::MatrixXd& flow_matrix(std::size_t i) const { return *flow_matrices[i]; }
};

// DC bus susceptance matrix (n x n, per-unit) with the outaged line removed.
Eigen::MatrixXd bus_susceptance(const NetworkCase& network, const Contingency& outage);

// Line susceptance matrix B_f (n_L x n, per-unit); the outaged line's row is
// zero.
Eigen::MatrixXd line_susceptance(const NetworkCase& network, const Contingency& outage);

// Bus-by-generator incidence (n x n_gen).
Eigen::MatrixXd generator_incidence(const NetworkCase& network);

// Injection-to-flow matrix A = B_f [B_red^-1 0; 0 0], where B_red drops the
// slack (last) row and column. Throws IslandingError when the outage splits
// the network and NumericalError if the reduced matrix is singular.
Eigen::MatrixXd build_flow_matrix(const NetworkCase& network, const Contingency& outage);

// Balancing participation proportional to p_max. Line outages use the base
// vector; an outaged generator gets zero and leaves the denominator. Throws
// NoBalancingCapacityError when no capacity remains.
Eigen::VectorXd participation_vector(const NetworkCase& network, const Contingency& outage);

// Base case, every line outage and every generator outage. Outages that
// island the network or leave no balancing capacity are moved to `excluded`.
// Throws IslandingError if the intact network is disconnected.
ContingencySet enumerate_contingencies(const NetworkCase& network);

// One CSV per contingency, named by position, for cross-checking.
void dump_flow_matrices(const NetworkCase& network, const ContingencySet& set,
                        const std::string& directory);

}  // namespace pscopf
