#include "rrdof/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rrdof/errors.hpp"

namespace rrdof {

namespace {

std::string location(const std::string& source, std::size_t row, std::size_t col) {
  return source + ":" + std::to_string(row) + ":" + std::to_string(col);
}

// Splits one record into fields, honouring double quotes. `pos` is advanced
// past the record terminator. Returns false at end of input.
bool next_record(std::string_view text, std::size_t& pos, std::vector<std::string>& fields, std::size_t line,
                 const std::string& source) {
  fields.clear();
  if (pos >= text.size()) return false;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field += '"';
          pos += 2;
          continue;
        }
        quoted = false;
        ++pos;
        continue;
      }
      field += c;
      ++pos;
      continue;
    }
    if (c == '"') {
      require(field.empty() && !was_quoted, Errc::parse,
              location(source, line, fields.size() + 1) + ": stray quote inside field");
      quoted = true;
      was_quoted = true;
      ++pos;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
      ++pos;
    } else if (c == '\r' || c == '\n') {
      ++pos;
      if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
      break;
    } else {
      field += c;
      ++pos;
    }
  }
  require(!quoted, Errc::parse, location(source, line, fields.size() + 1) + ": unterminated quoted field");
  fields.push_back(std::move(field));
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view raw, std::size_t row, std::size_t col, const std::string& source) {
  std::string_view cell = trim(raw);
  require(!cell.empty(), Errc::parse, location(source, row, col) + ": missing value");
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  require(ec == std::errc() && ptr == cell.data() + cell.size(), Errc::parse,
          location(source, row, col) + ": non-numeric cell '" + std::string(raw) + "'");
  require(std::isfinite(value), Errc::parse, location(source, row, col) + ": non-finite value");
  return value;
}

}  // namespace

CsvTable parse_csv(std::string_view text, const CsvOptions& options, const std::string& source) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> fields;
  std::size_t pos = 0;
  std::size_t line = 0;
  std::size_t width = 0;
  while (next_record(text, pos, fields, line + 1, source)) {
    ++line;
    // Blank lines (typically a trailing newline) carry no record.
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (options.header && line == 1) {
      table.header = fields;
      width = fields.size();
      continue;
    }
    if (width == 0) width = fields.size();
    require(fields.size() == width, Errc::parse,
            location(source, line, fields.size()) + ": expected " + std::to_string(width) + " fields, found " +
                std::to_string(fields.size()));
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) row[c] = parse_cell(fields[c], line, c + 1, source);
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), Errc::parse, source + ": no data rows");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];

  if (options.log) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        require(m(r, c) > 0.0, Errc::parse,
                location(source, static_cast<std::size_t>(r) + 1 + (options.header ? 1 : 0),
                         static_cast<std::size_t>(c) + 1) +
                    ": log transform needs positive values");
        m(r, c) = std::log(m(r, c));
      }
  }
  if (options.standardize)
    standardize_columns(m);
  else if (options.center)
    center_columns(m);
  table.values = std::move(m);
  return table;
}

CsvTable ingest_csv_table(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  require(!text.empty(), Errc::parse, path + ": empty file");
  return parse_csv(text, options, path);
}

Eigen::MatrixXd ingest_csv(const std::string& path, const CsvOptions& options) {
  return ingest_csv_table(path, options).values;
}

void center_columns(Eigen::MatrixXd& m) { m.rowwise() -= m.colwise().mean(); }

void standardize_columns(Eigen::MatrixXd& m) {
  require(m.rows() >= 2, Errc::domain, "standardize: need at least two rows");
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double mean = m.col(c).mean();
    m.col(c).array() -= mean;
    const double sd = std::sqrt(m.col(c).squaredNorm() / static_cast<double>(m.rows() - 1));
    require(sd > 0.0, Errc::domain, "standardize: column " + std::to_string(c + 1) + " is constant");
    m.col(c) /= sd;
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), Errc::io, "number formatting failed");
  return std::string(buf, ptr);
}

std::string format_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) out += ',';
      out += header[c];
    }
    out += '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io, "cannot write '" + path + "'");
  out << text;
  require(out.good(), Errc::io, "write to '" + path + "' failed");
}

void write_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  write_text(path, format_csv(m, header));
}

}  // namespace rrdof
