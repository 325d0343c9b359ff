#include "plada/csv.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

namespace plada::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool next_line(std::istream& is, std::string& line) {
  if (!std::getline(is, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw FormatError("CSV line " + std::to_string(line_no) +
                      ": cannot parse real number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw FormatError("CSV line " + std::to_string(line_no) +
                      ": cannot parse integer '" + s + "'");
  return v;
}

void expect_header(std::istream& is, const std::string& expected) {
  std::string line;
  if (!next_line(is, line))
    throw FormatError("CSV: empty input, expected header '" + expected + "'");
  if (line != expected)
    throw FormatError("CSV: header '" + line + "', expected '" + expected + "'");
}

}  // namespace

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_scores(std::ostream& os, std::span<const double> scores) {
  os << "row_index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    os << i << ',' << g17(scores[i]) << '\n';
}

std::vector<double> read_scores(std::istream& is) {
  expect_header(is, "row_index,score");
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 1;
  while (next_line(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != 2)
      throw FormatError("CSV line " + std::to_string(line_no) +
                        ": expected 2 cells, got " + std::to_string(cells.size()));
    const std::uint64_t idx = parse_u64(cells[0], line_no);
    if (idx != out.size())
      throw FormatError("CSV line " + std::to_string(line_no) + ": row_index " +
                        cells[0] + " out of order");
    out.push_back(parse_double(cells[1], line_no));
  }
  return out;
}

void write_indices(std::ostream& os, std::span<const std::uint64_t> indices) {
  os << "index\n";
  for (auto idx : indices) os << idx << '\n';
}

std::vector<std::uint64_t> read_indices(std::istream& is) {
  expect_header(is, "index");
  std::vector<std::uint64_t> out;
  std::string line;
  std::size_t line_no = 1;
  while (next_line(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse_u64(line, line_no));
  }
  return out;
}

void write_labels(std::ostream& os, std::span<const std::uint64_t> indices,
                  std::span<const std::uint32_t> labels) {
  os << "index,label\n";
  for (std::size_t i = 0; i < indices.size(); ++i)
    os << indices[i] << ',' << labels[i] << '\n';
}

std::vector<std::pair<std::uint64_t, std::uint32_t>> read_labels(std::istream& is) {
  expect_header(is, "index,label");
  std::vector<std::pair<std::uint64_t, std::uint32_t>> out;
  std::string line;
  std::size_t line_no = 1;
  while (next_line(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != 2)
      throw FormatError("CSV line " + std::to_string(line_no) +
                        ": expected 2 cells, got " + std::to_string(cells.size()));
    const std::uint64_t idx = parse_u64(cells[0], line_no);
    const std::uint64_t label = parse_u64(cells[1], line_no);
    if (label > 0xFFFFFFFFull)
      throw FormatError("CSV line " + std::to_string(line_no) + ": label " +
                        cells[1] + " exceeds 32 bits");
    out.emplace_back(idx, static_cast<std::uint32_t>(label));
  }
  return out;
}

void write_weights(std::ostream& os, std::span<const std::uint64_t> indices,
                   std::span<const double> weights) {
  os << "index,weight\n";
  for (std::size_t i = 0; i < indices.size(); ++i)
    os << indices[i] << ',' << g17(weights[i]) << '\n';
}

void write_matrix(std::ostream& os, const Matrix& m) {
  for (std::size_t c = 0; c < m.cols; ++c) os << (c ? "," : "") << 'c' << c;
  os << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c)
      os << (c ? "," : "") << g17(row[c]);
    os << '\n';
  }
}

Matrix read_matrix(std::istream& is) {
  std::string line;
  if (!next_line(is, line)) throw FormatError("CSV: empty matrix input");
  const std::size_t cols = split(line).size();
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (next_line(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != cols)
      throw FormatError("CSV line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " cells, got " +
                        std::to_string(cells.size()));
    for (const auto& cell : cells) data.push_back(parse_double(cell, line_no));
    ++rows;
  }
  return Matrix(rows, cols, std::move(data));
}

void write_pairs(std::ostream& os,
                 std::span<const std::pair<std::uint64_t, std::uint64_t>> pairs) {
  os << "a_index,b_index\n";
  for (const auto& [a, b] : pairs) os << a << ',' << b << '\n';
}

}  // namespace plada::csv
