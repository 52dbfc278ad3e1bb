#include "stochflow/csv.hpp"

#include "stochflow/errors.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace stochflow::csv {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_row(std::ostream& out, std::span<const std::string> cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << quote(cells[i]);
    }
    out << "\r\n";
}

void write_row(std::ostream& out, std::span<const double> cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << format_double(cells[i]);
    }
    out << "\r\n";
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    write_row(out, std::span<const std::string>(cells));
}

void write_row(std::ostream& out, const std::vector<double>& cells) { write_row(out, std::span<const double>(cells)); }

void write_columns(std::ostream& out, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) throw DimensionMismatch("CSV header/column count differ");
    write_row(out, header);
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != rows) throw DimensionMismatch("CSV columns differ in length");
    }
    std::vector<double> row(columns.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) row[c] = columns[c][r];
        write_row(out, row);
    }
}

}  // namespace stochflow::csv
