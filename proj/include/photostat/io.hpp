#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "photostat/core_dist.hpp"
#include "photostat/mlrecon.hpp"
#include "photostat/quasi.hpp"

namespace photostat {

using Cell = std::variant<double, std::int64_t, std::string, bool>;

/// A named rectangular result set; written as CSV or as a JSON record array.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// Doubles are printed with %.17g, so output is byte-stable and round-trips.
std::string format_cell(const Cell& cell);
void write_csv(const Table& table, std::ostream& out);
void write_json(const Table& table, std::ostream& out);
/// Writes `<dir>/<name>.<format>` and returns the path.
std::string write_table(const Table& table, const std::string& dir, const std::string& format);

Table distribution_table(const std::string& name, const PhotonNumberDistribution& p);
Table joint_table(const std::string& name, const JointPhotonNumberDistribution& j);
Table quasi_table(const std::string& name, const QuasiDistribution& q);
Table joint_quasi_table(const std::string& name, const JointQuasiDistribution& q);
Table histogram_table(const std::string& name, const PhotocountHistogram& h);

/// Reads an `n,probability` CSV. Throws ConfigError on malformed input.
PhotonNumberDistribution read_distribution_csv(const std::string& path);
/// Reads an `n_s,n_i,probability` CSV.
JointPhotonNumberDistribution read_joint_csv(const std::string& path);

}  // namespace photostat
