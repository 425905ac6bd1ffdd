#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gkpca/dataset.hpp"
#include "gkpca/error.hpp"

namespace gkpca {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace detail

struct CsvOptions {
  bool has_labels = false;  // last column is an integer label
  bool has_header = false;  // first non-blank line is skipped
};

/// Parses a rectangular numeric CSV. Blank lines are ignored; errors name the 1-based line.
inline Dataset parse_csv(std::istream& in, const CsvOptions& opt = {}, const std::string& name = "csv") {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header_skipped = !opt.has_header;

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    const auto cells = detail::split_commas(line);
    if (width == 0) {
      width = cells.size();
      if (opt.has_labels && width < 2) fail(ErrorKind::Format, name + ":" + std::to_string(line_no) + ": need a feature column before the label");
    } else if (cells.size() != width) {
      fail(ErrorKind::Format, name + ":" + std::to_string(line_no) + ": row " + std::to_string(rows.size() + 1) +
                                  " has " + std::to_string(cells.size()) + " cells, expected " + std::to_string(width));
    }
    std::vector<double> values;
    values.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v) fail(ErrorKind::Format, name + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                                          std::string(detail::trim(cells[c])) + "' in column " + std::to_string(c + 1));
      values.push_back(*v);
    }
    if (opt.has_labels) {
      const double label = values.back();
      if (label != static_cast<double>(static_cast<int>(label)))
        fail(ErrorKind::Format, name + ":" + std::to_string(line_no) + ": label is not an integer");
      labels.push_back(static_cast<int>(label));
      values.pop_back();
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) fail(ErrorKind::Format, name + ": no data rows");

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto dim = static_cast<Eigen::Index>(rows.front().size());
  ds.X.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) ds.X(i, j) = rows[i][j];
  if (opt.has_labels) ds.labels = std::move(labels);
  return ds;
}

inline Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return parse_csv(in, opt, path.string());
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Writes rows as CSV, with an optional trailing label column.
inline void write_csv(std::ostream& out, const DataMatrix& X, const std::optional<std::vector<int>>& labels = std::nullopt) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(X(i, j));
    }
    if (labels) out << ',' << (*labels)[i];
    out << '\n';
  }
}

}  // namespace gkpca
