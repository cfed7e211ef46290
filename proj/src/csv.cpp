#include "ssgp/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssgp/errors.hpp"

namespace ssgp {

arma::uword Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ValidationError("table has no column '" + name + "'");
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open " + tmp + " for writing");
    out << content;
    out.flush();
    if (!out) throw ValidationError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

std::string table_text(const std::vector<std::string>& header, const arma::mat& data) {
  if (header.size() != data.n_cols) throw ArgumentError("table: header and data widths differ");
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (arma::uword r = 0; r < data.n_rows; ++r) {
    for (arma::uword c = 0; c < data.n_cols; ++c) {
      if (c) out += ',';
      out += format_double(data(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_table(const std::string& path, const std::vector<std::string>& header, const arma::mat& data) {
  atomic_write(path, table_text(header, data));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing input file " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_line(line);
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw ValidationError(path + ": row " + std::to_string(rows + 2) + " has the wrong number of fields");
    }
    for (const auto& c : cells) {
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size() || errno == ERANGE) {
        throw ValidationError(path + ": non-numeric value '" + c + "' on row " + std::to_string(rows + 2));
      }
      values.push_back(v);
    }
    ++rows;
  }
  t.data.set_size(rows, t.header.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < t.header.size(); ++c) t.data(r, c) = values[r * t.header.size() + c];
  }
  return t;
}

}  // namespace ssgp
