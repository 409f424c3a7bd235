#include "spmnl/csv.hpp"

#include "spmnl/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace spmnl::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t");
    const auto e = field.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file '" + path + "'");
  Table table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split(line);
    if (!have_header) {
      // strip a UTF-8 byte order mark
      if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InvalidArgument(path + " line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw InvalidArgument(path + ": empty file (header row required)");
  return table;
}

double parse_number(const std::string& text, const std::string& file, std::size_t row,
                    const std::string& column) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  const auto where = file + " row " + std::to_string(row + 1) + ", column '" + column + "'";
  if (text.empty() || end != begin + text.size()) {
    throw InvalidArgument(where + ": '" + text + "' is not a number");
  }
  if (!std::isfinite(v)) throw DomainError(where + ": non-finite value '" + text + "'");
  return v;
}

Eigen::MatrixXd numeric_block(const Table& table, const std::string& file,
                              std::size_t first_col) {
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto m = static_cast<Eigen::Index>(table.header.size() - first_col);
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto col = first_col + static_cast<std::size_t>(c);
      out(i, c) = parse_number(table.rows[i][col], file, static_cast<std::size_t>(i),
                               table.header[col]);
    }
  }
  return out;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_report(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path + "'");
  return out;
}

}  // namespace spmnl::csv
