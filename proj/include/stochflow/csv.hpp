#pragma once

// RFC-4180 style CSV with '.' decimals and 17 significant digits.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace stochflow::csv {

std::string format_double(double v);

void write_row(std::ostream& out, std::span<const std::string> cells);
void write_row(std::ostream& out, std::span<const double> cells);
void write_row(std::ostream& out, const std::vector<std::string>& cells);
void write_row(std::ostream& out, const std::vector<double>& cells);

/// Header row plus one row per index of equally long columns.
void write_columns(std::ostream& out, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns);

}  // namespace stochflow::csv
