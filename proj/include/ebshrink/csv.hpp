#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ebshrink/dataset.hpp"

namespace ebshrink {

// Numeric CSV with a mandatory header row. Empty or non-numeric cells are
// rejected (no missing-value support).
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
std::string format_csv(const std::vector<std::string>& header,
                       const Eigen::MatrixXd& values);

// Shortest round-trip representation of a double, for byte-stable output.
std::string format_double(double v);

// X from x_path; response either from y_path (single-column CSV) or from the
// named column of the X file. Exactly one of y_path / response_column must be
// given (non-empty).
Dataset load_dataset(const std::string& x_path, const std::string& y_path,
                     const std::string& response_column, Family family);

}  // namespace ebshrink
