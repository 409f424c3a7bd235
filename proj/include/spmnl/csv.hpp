#pragma once

#include <Eigen/Dense>

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace spmnl::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file with a header row. Every data row must have
/// as many fields as the header. Blank lines are skipped, CRLF tolerated.
Table read(const std::string& path);

/// Parses a finite double; on failure throws with "<file> row r, column c".
double parse_number(const std::string& text, const std::string& file, std::size_t row,
                    const std::string& column);

/// Numeric block of columns [first_col, header.size()) as a matrix.
Eigen::MatrixXd numeric_block(const Table& table, const std::string& file,
                              std::size_t first_col);

/// Shortest round-trip representation (%.17g).
std::string format_full(double v);

/// Six significant digits, for human-facing reports.
std::string format_report(double v);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Opens `path` for writing or throws ConfigError naming the path.
std::ofstream open_output(const std::string& path);

}  // namespace spmnl::csv
