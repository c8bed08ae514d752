#include "photostat/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "photostat/errors.hpp"

namespace photostat {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::ordered_json cell_json(const Cell& cell) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, cell);
}

// Splits a CSV data line into numeric fields; false on any malformed field.
bool parse_numbers(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::istringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0') return false;
    out.push_back(v);
  }
  return true;
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path, const std::string& header,
                                                  std::size_t width) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  std::vector<double> fields;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line == header) continue;
    if (!parse_numbers(line, fields) || fields.size() != width) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected '" + header + "'");
    }
    rows.push_back(fields);
  }
  if (rows.empty()) throw ConfigError(path + " has no data");
  return rows;
}

int index_field(double v, const std::string& path) {
  if (!(v >= 0.0) || v != static_cast<double>(static_cast<int>(v)) || v > 1e7) {
    throw ConfigError(path + ": photon numbers must be non-negative integers");
  }
  return static_cast<int>(v);
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw InvalidArgument("table " + name + ": row width mismatch");
  rows.push_back(std::move(row));
}

std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return csv_escape(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, cell);
}

void write_csv(const Table& table, std::ostream& out) {
  for (std::size_t k = 0; k < table.columns.size(); ++k) out << (k ? "," : "") << table.columns[k];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_cell(row[k]);
    out << '\n';
  }
}

void write_json(const Table& table, std::ostream& out) {
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json rec = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < row.size(); ++k) rec[table.columns[k]] = cell_json(row[k]);
    records.push_back(std::move(rec));
  }
  nlohmann::ordered_json doc = {{"table", table.name}, {"columns", table.columns}, {"records", records}};
  out << doc.dump(1) << '\n';
}

std::string write_table(const Table& table, const std::string& dir, const std::string& format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string path = (std::filesystem::path(dir) / (table.name + "." + format)).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  if (format == "json") {
    write_json(table, out);
  } else {
    write_csv(table, out);
  }
  if (!out) throw ConfigError("write failed for " + path);
  return path;
}

Table distribution_table(const std::string& name, const PhotonNumberDistribution& p) {
  Table t{name, {"n", "probability"}, {}};
  for (int n = 0; n <= p.cutoff(); ++n) t.add_row({std::int64_t{n}, p[n]});
  return t;
}

Table joint_table(const std::string& name, const JointPhotonNumberDistribution& j) {
  Table t{name, {"n_s", "n_i", "probability"}, {}};
  for (int a = 0; a <= j.cutoff(Axis::Signal); ++a) {
    for (int b = 0; b <= j.cutoff(Axis::Idler); ++b) t.add_row({std::int64_t{a}, std::int64_t{b}, j(a, b)});
  }
  return t;
}

Table quasi_table(const std::string& name, const QuasiDistribution& q) {
  Table t{name, {"W", "P"}, {}};
  for (Eigen::Index k = 0; k < q.grid.size(); ++k) t.add_row({q.grid[k], q.values[k]});
  return t;
}

Table joint_quasi_table(const std::string& name, const JointQuasiDistribution& q) {
  Table t{name, {"W_s", "W_i", "P"}, {}};
  for (Eigen::Index a = 0; a < q.grid_s.size(); ++a) {
    for (Eigen::Index b = 0; b < q.grid_i.size(); ++b) t.add_row({q.grid_s[a], q.grid_i[b], q.values(a, b)});
  }
  return t;
}

Table histogram_table(const std::string& name, const PhotocountHistogram& h) {
  Table t{name, {"c", "count"}, {}};
  for (std::size_t c = 0; c < h.counts.size(); ++c) {
    t.add_row({static_cast<std::int64_t>(c), static_cast<std::int64_t>(h.counts[c])});
  }
  return t;
}

PhotonNumberDistribution read_distribution_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path, "n,probability", 2);
  int cutoff = 0;
  for (const auto& r : rows) cutoff = std::max(cutoff, index_field(r[0], path));
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(cutoff + 1);
  for (const auto& r : rows) probs[index_field(r[0], path)] += r[1];
  try {
    return PhotonNumberDistribution(std::move(probs));
  } catch (const InvalidArgument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

JointPhotonNumberDistribution read_joint_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path, "n_s,n_i,probability", 3);
  int cs = 0;
  int ci = 0;
  for (const auto& r : rows) {
    cs = std::max(cs, index_field(r[0], path));
    ci = std::max(ci, index_field(r[1], path));
  }
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(cs + 1, ci + 1);
  for (const auto& r : rows) probs(index_field(r[0], path), index_field(r[1], path)) += r[2];
  try {
    return JointPhotonNumberDistribution(std::move(probs));
  } catch (const InvalidArgument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace photostat
