#include "stgin/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "stgin/errors.hpp"

namespace stgin::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<Row> read_cells(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<Row> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::string_view view = line;
    if (first && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    first = false;
    if (trim(view).empty()) continue;
    Row row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      row.emplace_back(trim(view.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

std::string format_double(double value) {
  std::array<char, 64> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), ptr);
}

void write_matrix(const std::filesystem::path& path, const Tensor& matrix) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::size_t rows = matrix.rows(), cols = matrix.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c > 0) out << ',';
      out << format_double(matrix(r, c));
    }
    out << '\n';
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

Tensor read_matrix(const std::filesystem::path& path) {
  const auto rows = read_cells(path);
  if (rows.empty()) throw FormatError(path.string() + ": no data");
  const std::size_t cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw FormatError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(rows[r].size()) + " columns, expected " +
                        std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = parse_double(rows[r][c]);
      if (!v) {
        throw FormatError(path.string() + ": row " + std::to_string(r + 1) + ", column " +
                          std::to_string(c + 1) + ": '" + rows[r][c] + "' is not a number");
      }
      values.push_back(*v);
    }
  }
  return Tensor({rows.size(), cols}, std::move(values));
}

}  // namespace stgin::csv
