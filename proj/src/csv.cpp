#include "ebshrink/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ebshrink/errors.hpp"

namespace ebshrink {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col,
                  const std::string& origin) {
  const std::string cell = trim(raw);
  if (cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN")
    throw DomainError("csv: missing value at row " + std::to_string(row) +
                      ", column " + std::to_string(col) + " of " + origin);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(cell.c_str(), &end);
  if (errno != 0 || end == cell.c_str() || *end != '\0')
    throw DomainError("csv: non-numeric value '" + cell + "' at row " +
                      std::to_string(row) + ", column " + std::to_string(col) +
                      " of " + origin);
  return v;
}

}  // namespace

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<int>(j);
  return -1;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw DomainError("csv: " + origin + " is empty (header row required)");
  CsvTable table;
  for (auto& h : split_line(line)) table.header.push_back(trim(h));
  const std::size_t ncol = table.header.size();
  if (ncol == 0) throw DomainError("csv: " + origin + " has an empty header");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != ncol)
      throw DomainError("csv: row " + std::to_string(lineno) + " of " + origin +
                        " has " + std::to_string(cells.size()) +
                        " fields, expected " + std::to_string(ncol));
    std::vector<double> row(ncol);
    for (std::size_t j = 0; j < ncol; ++j)
      row[j] = parse_cell(cells[j], lineno, j, origin);
    rows.push_back(std::move(row));
  }

  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(ncol));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < ncol; ++j)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

std::string format_double(double v) {
  char buf[40];
  // Shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

std::string format_csv(const std::vector<std::string>& header,
                       const Eigen::MatrixXd& values) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += header[j];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out += ',';
      out += format_double(values(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << format_csv(header, values);
  if (!out) throw IoError("write failed for " + path);
}

Dataset load_dataset(const std::string& x_path, const std::string& y_path,
                     const std::string& response_column, Family family) {
  if (y_path.empty() == response_column.empty())
    throw DomainError(
        "load_dataset: give exactly one of a response file or a response "
        "column name");
  CsvTable xt = read_csv(x_path);
  if (!y_path.empty()) {
    CsvTable yt = read_csv(y_path);
    if (yt.values.cols() != 1)
      throw DomainError("load_dataset: response file must have one column");
    return make_dataset(std::move(xt.values), yt.values.col(0), family);
  }
  const int yc = xt.column_index(response_column);
  if (yc < 0)
    throw DomainError("load_dataset: no column named '" + response_column +
                      "' in " + x_path);
  Eigen::VectorXd y = xt.values.col(yc);
  Eigen::MatrixXd X(xt.values.rows(), xt.values.cols() - 1);
  Eigen::Index out_j = 0;
  for (Eigen::Index j = 0; j < xt.values.cols(); ++j) {
    if (j == yc) continue;
    X.col(out_j++) = xt.values.col(j);
  }
  return make_dataset(std::move(X), std::move(y), family);
}

}  // namespace ebshrink
