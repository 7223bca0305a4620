#pragma once

#include <Eigen/Dense>

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace brcat {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grouped categorical data: one row per covariate pattern, a count vector over
// the k ordered response categories, and the multinomial total per row.
struct Dataset {
  Eigen::MatrixXd x;       // n x p covariate values
  Eigen::MatrixXd y;       // n x k nonnegative integer counts
  Eigen::VectorXd totals;  // row sums of y, each >= 1
  std::vector<std::string> category_labels;  // size k, order is meaningful
  std::vector<std::string> covariate_names;  // size p

  int n() const { return static_cast<int>(y.rows()); }
  int k() const { return static_cast<int>(y.cols()); }
  int p() const { return static_cast<int>(x.cols()); }

  // Throws ParseError if counts are negative/non-integral, rows are empty, or
  // dimensions disagree.
  void validate() const;
};

// Column mapping for CSV input. Exactly one of `count_columns` (wide format:
// one count column per category) or `label_column` (long format: one row per
// trial) must be set. For long format, `categories` fixes the category order;
// if empty, the sorted distinct labels are used.
struct CsvSchema {
  std::vector<std::string> covariate_columns;
  std::vector<std::string> count_columns;
  std::string label_column;
  std::vector<std::string> categories;
};

// RFC 4180 CSV with a header row. Rows sharing a covariate pattern are
// aggregated (counts summed), preserving first-appearance order.
Dataset parse_dataset(std::istream& in, const CsvSchema& schema);

Dataset load_dataset(const std::string& path, const CsvSchema& schema);

}  // namespace brcat
