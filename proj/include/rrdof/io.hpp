#pragma once

// CSV ingestion and emission. Files are RFC-4180 style, UTF-8, '.' decimal
// separator, one observation per row. Missing cells are rejected.

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rrdof {

struct CsvOptions {
  bool header = false;       // skip the first row
  bool log = false;          // natural log of every cell (cells must be > 0)
  bool center = false;       // subtract column means
  bool standardize = false;  // per-column z-score with the sample sd (implies center)
};

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

CsvTable parse_csv(std::string_view text, const CsvOptions& options, const std::string& source = "<memory>");
Eigen::MatrixXd ingest_csv(const std::string& path, const CsvOptions& options = {});
CsvTable ingest_csv_table(const std::string& path, const CsvOptions& options = {});

void center_columns(Eigen::MatrixXd& m);

/// Column means 0 and sample standard deviations 1. Constant columns are an
/// error since they cannot be scaled.
void standardize_columns(Eigen::MatrixXd& m);

/// Shortest round-trip formatting, so ingest_csv(write_csv(m)) == m bit-exactly.
std::string format_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header = {});
void write_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header = {});
void write_text(const std::string& path, const std::string& text);
std::string format_double(double v);

}  // namespace rrdof
