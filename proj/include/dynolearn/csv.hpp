#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dynolearn/systems.hpp"

namespace dynolearn {

// Shortest round-trip-safe form is not required; CSV floats always carry 17
// significant digits so files compare byte-for-byte across runs.
std::string format_double(double x);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// Minimal reader for the numeric CSVs this project writes. `inf`/`nan` parse.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(std::istream& is);

}  // namespace dynolearn
