#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "trajcd/coefficient_vector.hpp"
#include "trajcd/dataset.hpp"
#include "trajcd/error.hpp"
#include "trajcd/projection.hpp"

// Two matrix-shaped CSV layouts, one trajectory per column:
//
//   t,id1,id2,...        sampled curves: one row per time, times strictly increasing
//   coef,id1,id2,...     coefficients:   one row per k = 1..n, holding <f, e_k>

namespace trajcd::csv {

enum class Layout { Trajectory, Coefficient };

inline const char* to_string(Layout layout) {
  return layout == Layout::Trajectory ? "trajectory" : "coefficient";
}

struct Table {
  Layout layout = Layout::Trajectory;
  std::vector<std::string> ids;
  std::vector<SampledTrajectory> curves;     // Layout::Trajectory
  std::vector<CoefficientVector> coeffs;     // Layout::Coefficient

  std::size_t size() const noexcept { return ids.size(); }

  // Coefficient rows available per trajectory (unbounded for sampled curves).
  std::optional<std::size_t> coefficient_rows() const {
    if (layout == Layout::Trajectory || coeffs.empty()) return std::nullopt;
    return coeffs.front().size();
  }

  // Projects curves onto the first n coefficients; coefficient tables must carry
  // at least n rows and are truncated to exactly n.
  TrajectoryDataset to_dataset(int n, std::optional<int> quad_points, Domain domain) const {
    if (layout == Layout::Trajectory) {
      if (curves.empty()) return TrajectoryDataset(domain);
      return TrajectoryDataset::from_trajectories(curves, n, quad_points);
    }
    std::vector<CoefficientVector> truncated;
    truncated.reserve(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i].size() < static_cast<std::size_t>(n)) {
        throw MismatchError("trajectory '" + ids[i] + "' has " + std::to_string(coeffs[i].size()) +
                            " coefficient rows, n = " + std::to_string(n) + " are required");
      }
      const auto& v = coeffs[i].vector();
      truncated.emplace_back(std::vector<double>(v.begin(), v.begin() + n));
    }
    return TrajectoryDataset::from_coefficients(std::move(truncated), domain, ids);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE ||
      !std::isfinite(value)) {
    throw InputError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                     ": cannot parse '" + cell + "' as a finite number");
  }
  return value;
}

}  // namespace detail

inline Table read_table(std::istream& in, Domain domain = {}) {
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 0;
  std::vector<std::size_t> row_numbers;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    rows.push_back(detail::split(line));
    row_numbers.push_back(line_no);
  }
  if (rows.empty()) throw InputError("CSV input is empty (no header row)");

  const auto& header = rows.front();
  Table table;
  if (header[0] == "t") {
    table.layout = Layout::Trajectory;
  } else if (header[0] == "coef") {
    table.layout = Layout::Coefficient;
  } else {
    throw InputError("row 1: first header cell must be 't' or 'coef', got '" + header[0] + "'");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) {
      throw InputError("row 1, column " + std::to_string(c + 1) + ": empty trajectory id");
    }
    table.ids.push_back(header[c]);
  }
  const std::size_t width = header.size();

  std::vector<double> keys;
  std::vector<std::vector<double>> columns(table.ids.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto row_no = row_numbers[r];
    if (rows[r].size() != width) {
      throw InputError("row " + std::to_string(row_no) + ": expected " + std::to_string(width) +
                       " cells, got " + std::to_string(rows[r].size()));
    }
    keys.push_back(detail::parse_cell(rows[r][0], row_no, 1));
    for (std::size_t c = 1; c < width; ++c) {
      columns[c - 1].push_back(detail::parse_cell(rows[r][c], row_no, c + 1));
    }
  }

  if (table.layout == Layout::Coefficient) {
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (keys[k] != static_cast<double>(k + 1)) {
        throw InputError("row " + std::to_string(row_numbers[k + 1]) +
                         ": coefficient rows must be numbered 1, 2, ... in order");
      }
    }
    if (!table.ids.empty() && keys.empty()) {
      throw InputError("coefficient CSV has trajectory columns but no coefficient rows");
    }
    for (auto& column : columns) table.coeffs.emplace_back(std::move(column));
    return table;
  }

  for (std::size_t c = 0; c < columns.size(); ++c) {
    try {
      table.curves.emplace_back(keys, std::move(columns[c]), domain, table.ids[c]);
    } catch (const MismatchError&) {
      throw;
    } catch (const Error& e) {
      throw InputError(std::string("column ") + std::to_string(c + 2) + ": " + e.what());
    }
  }
  return table;
}

inline Table read_table_file(const std::string& path, Domain domain = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return read_table(in, domain);
  } catch (const MismatchError& e) {
    throw MismatchError(path + ": " + e.what());
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline std::string number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// columns[i][r] is trajectory i at times[r].
inline void write_trajectories(std::ostream& out, const std::vector<double>& times,
                               const std::vector<std::string>& ids,
                               const std::vector<std::vector<double>>& columns) {
  out << 't';
  for (const auto& id : ids) out << ',' << id;
  out << '\n';
  for (std::size_t r = 0; r < times.size(); ++r) {
    out << number(times[r]);
    for (const auto& column : columns) out << ',' << number(column[r]);
    out << '\n';
  }
}

inline void write_coefficients(std::ostream& out, const std::vector<std::string>& ids,
                               const std::vector<CoefficientVector>& coeffs) {
  out << "coef";
  for (const auto& id : ids) out << ',' << id;
  out << '\n';
  const std::size_t rows = coeffs.empty() ? 0 : coeffs.front().size();
  for (std::size_t k = 0; k < rows; ++k) {
    out << (k + 1);
    for (const auto& c : coeffs) out << ',' << number(c[k]);
    out << '\n';
  }
}

}  // namespace trajcd::csv
