#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stgin/tensor.hpp"

namespace stgin::csv {

using Row = std::vector<std::string>;

/// Splits a comma-separated file into trimmed cells. Blank lines are skipped;
/// a UTF-8 byte-order mark is ignored. Throws FormatError if the file cannot
/// be opened.
std::vector<Row> read_cells(const std::filesystem::path& path);

/// Parses a whole cell as a double; nullopt for anything else.
std::optional<double> parse_double(std::string_view cell);

/// Shortest text that reads back to exactly the same double.
std::string format_double(double value);

/// Rows of reals, no header.
void write_matrix(const std::filesystem::path& path, const Tensor& matrix);

/// Header-less numeric matrix; every cell must parse and rows must agree in
/// width. Errors name the 1-based line and column.
Tensor read_matrix(const std::filesystem::path& path);

}  // namespace stgin::csv
