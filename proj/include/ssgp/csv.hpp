#pragma once

#include <armadillo>
#include <string>
#include <vector>

namespace ssgp {

// Numeric table with a header row, comma separated.
struct Table {
  std::vector<std::string> header;
  arma::mat data;

  arma::uword column(const std::string& name) const;
};

// Shortest round-tripping text for a double (%.17g).
std::string format_double(double x);

// Write to a sibling temporary file, then rename into place.
void atomic_write(const std::string& path, const std::string& content);

std::string table_text(const std::vector<std::string>& header, const arma::mat& data);
void write_table(const std::string& path, const std::vector<std::string>& header, const arma::mat& data);
Table read_table(const std::string& path);

}  // namespace ssgp
