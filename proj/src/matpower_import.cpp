#include "pscopf/case_io.hpp"

#include "pscopf/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

namespace pscopf {

namespace {

using Table = std::vector<std::vector<double>>;

// Line number (1-based) of a character offset, for diagnostics.
std::size_t line_of(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) line += text[i] == '\n' ? 1 : 0;
  return line;
}

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char c : text) {
    if (c == '%') in_comment = true;
    if (c == '\n') in_comment = false;
    out.push_back(in_comment ? ' ' : c);
  }
  return out;
}

std::optional<Table> read_matrix(const std::string& text, const std::string& name) {
  const std::string key = "mpc." + name;
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t after = pos + key.size();
    while (after < text.size() && (text[after] == ' ' || text[after] == '\t')) ++after;
    if (after < text.size() && text[after] == '=') break;
    pos = after;
  }
  if (pos == std::string::npos) return std::nullopt;

  const auto open = text.find('[', pos);
  const auto close = text.find(']', open);
  if (open == std::string::npos || close == std::string::npos) {
    throw ParseError(line_of(text, pos), "unterminated matrix for " + key);
  }
  Table table;
  std::vector<double> row;
  std::size_t i = open + 1;
  auto flush = [&] {
    if (!row.empty()) table.push_back(std::move(row));
    row.clear();
  };
  while (i < close) {
    const char c = text[i];
    if (c == ';' || c == '\n') {
      flush();
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
      ++i;
    } else {
      const char* begin = text.c_str() + i;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ParseError(line_of(text, i), "bad number in " + key);
      row.push_back(v);
      i += static_cast<std::size_t>(end - begin);
    }
  }
  flush();
  return table;
}

double read_scalar(const std::string& text, const std::string& name, double fallback) {
  const std::string key = "mpc." + name;
  const auto pos = text.find(key);
  if (pos == std::string::npos) return fallback;
  const auto eq = text.find('=', pos);
  if (eq == std::string::npos) throw ParseError(line_of(text, pos), "missing '=' after " + key);
  return std::strtod(text.c_str() + eq + 1, nullptr);
}

void require_columns(const Table& table, std::size_t columns, const std::string& name) {
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (table[r].size() < columns) {
      throw DimensionError("mpc." + name + " row " + std::to_string(r + 1) + " has " +
                           std::to_string(table[r].size()) + " columns, need " +
                           std::to_string(columns));
    }
  }
}

std::string bus_id(double v) {
  std::ostringstream os;
  os << static_cast<long long>(std::llround(v));
  return os.str();
}

}  // namespace

NetworkCase import_matpower(std::string_view raw, const MatpowerImportOptions& options) {
  if (!(options.default_limit > 0.0) || !(options.limit_scale > 0.0)) {
    throw DomainError("default limit and limit scale must be positive");
  }
  const std::string text = strip_comments(raw);
  const auto bus = read_matrix(text, "bus");
  const auto branch = read_matrix(text, "branch");
  const auto gen = read_matrix(text, "gen");
  const auto gencost = read_matrix(text, "gencost");
  if (!bus || !branch || !gen) throw ParseError(1, "case needs mpc.bus, mpc.branch and mpc.gen");
  require_columns(*bus, 3, "bus");
  require_columns(*branch, 11, "branch");
  require_columns(*gen, 10, "gen");
  if (gencost) require_columns(*gencost, 4, "gencost");

  std::ostringstream os;
  os.precision(17);
  os << "base_mva " << read_scalar(text, "baseMVA", 100.0) << "\n[bus]\n";
  for (const auto& row : *bus) {
    os << bus_id(row[0]) << (std::llround(row[1]) == 3 ? " slack" : "") << "\n";
  }
  os << "[line]\n";
  for (const auto& row : *branch) {
    if (row[10] == 0.0) continue;
    double limit = row[5];
    if (limit <= 0.0 || limit >= options.unlimited_rating) limit = options.default_limit;
    os << bus_id(row[0]) << " " << bus_id(row[1]) << " " << row[3] << " "
       << limit * options.limit_scale << "\n";
  }
  os << "[gen]\n";
  for (std::size_t g = 0; g < gen->size(); ++g) {
    const auto& row = (*gen)[g];
    if (row[7] <= 0.0) continue;
    double cost = 0.0;
    if (gencost && g < gencost->size()) {
      const auto& c = (*gencost)[g];
      if (std::llround(c[0]) != 2) {
        throw ValidationError("gencost row " + std::to_string(g + 1) +
                              ": only polynomial cost models are supported");
      }
      const auto terms = static_cast<std::size_t>(std::llround(c[3]));
      if (4 + terms > c.size()) throw DimensionError("gencost row " + std::to_string(g + 1) + " is short");
      if (terms >= 2) cost = c[4 + terms - 2];
    }
    const double p_min = options.zero_pmin ? 0.0 : row[9];
    os << bus_id(row[0]) << " " << cost << " " << p_min << " " << row[8] << "\n";
  }
  os << "[load]\n";
  for (const auto& row : *bus) {
    if (row[2] != 0.0) os << bus_id(row[0]) << " " << row[2] << "\n";
  }
  os << "[infeed]\n";
  if (options.uncertain_loads) {
    for (const auto& row : *bus) {
      if (row[2] > 0.0) os << bus_id(row[0]) << " 0\n";
    }
  }
  return parse_case(os.str());
}

}  // namespace pscopf
