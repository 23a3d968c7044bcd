#include "dynolearn/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

#include "dynolearn/errors.hpp"

namespace dynolearn {

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t p = traj.ys.empty() ? 0 : traj.ys.front().size();
  const std::size_t d = traj.xs && !traj.xs->empty() ? traj.xs->front().size() : 0;
  std::string line = "t";
  for (std::size_t i = 0; i < p; ++i) line += ",y_" + std::to_string(i);
  for (std::size_t i = 0; i < d; ++i) line += ",x_" + std::to_string(i);
  os << line << '\n';
  for (std::size_t t = 0; t < traj.ys.size(); ++t) {
    line = std::to_string(t);
    for (double v : traj.ys[t]) {
      line += ',';
      line += format_double(v);
    }
    if (d > 0)
      for (double v : (*traj.xs)[t]) {
        line += ',';
        line += format_double(v);
      }
    line += '\n';
    os << line;
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ContractViolation("csv: missing column '" + name + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("csv: cannot parse number '" + s + "'");
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("csv: empty input");
  table.header = split_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) throw ConfigError("csv: row width does not match header");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace dynolearn
