#pragma once
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>
#include <gknock/types.hpp>

namespace gknock {
namespace io {

enum class header_mode
{
    automatic,
    present,
    absent,
};

struct CsvTable
{
    mat_t values;                      // missing cells are NaN (only when allowed)
    std::vector<std::string> names;    // column names; empty when there was no header
    bool has_header = false;

    index_t rows() const { return values.rows(); }
    index_t cols() const { return values.cols(); }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            cur.push_back(c);
        } else if (c == ',' && !quoted) {
            cells.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.emplace_back(trim(cur));
    return cells;
}

/// Locale-independent parse of the whole cell.
inline bool parse_double(std::string_view s, double& out)
{
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool is_missing(std::string_view s) { return s.empty() || s == "NA"; }

} // namespace detail

/**
 * Parse comma-separated numeric data. In automatic header mode the first row
 * is a header when any of its cells fails to parse as a number. Empty cells
 * and NA are missing values: NaN when allow_missing, an error otherwise.
 */
inline CsvTable parse_matrix_csv(std::istream& in, header_mode mode = header_mode::automatic,
                                 bool allow_missing = false, const std::string& source = "<input>")
{
    std::vector<std::vector<std::string>> rows;
    std::vector<size_t> line_no;
    std::string line;
    size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (detail::trim(line).empty()) continue;
        rows.push_back(detail::split_line(line));
        line_no.push_back(ln);
    }
    if (rows.empty()) throw validation_error(source + ": empty file");

    CsvTable table;
    size_t first = 0;
    if (mode == header_mode::present) {
        table.has_header = true;
    } else if (mode == header_mode::automatic) {
        for (const auto& cell : rows[0]) {
            double v;
            if (!detail::parse_double(cell, v) && !detail::is_missing(cell)) {
                table.has_header = true;
                break;
            }
        }
    }
    const size_t ncols = rows[0].size();
    if (table.has_header) {
        table.names = rows[0];
        first = 1;
    }
    if (rows.size() == first) throw validation_error(source + ": no data rows");

    table.values.resize(static_cast<index_t>(rows.size() - first), static_cast<index_t>(ncols));
    for (size_t i = first; i < rows.size(); ++i) {
        if (rows[i].size() != ncols) {
            throw validation_error(source + ": row " + std::to_string(line_no[i]) + " has "
                                   + std::to_string(rows[i].size()) + " fields, expected "
                                   + std::to_string(ncols));
        }
        for (size_t j = 0; j < ncols; ++j) {
            const std::string& cell = rows[i][j];
            double v;
            if (detail::parse_double(cell, v)) {
                table.values(i - first, j) = v;
            } else if (detail::is_missing(cell) && allow_missing) {
                table.values(i - first, j) = std::numeric_limits<double>::quiet_NaN();
            } else {
                throw validation_error(source + ": row " + std::to_string(line_no[i]) + ", column "
                                       + std::to_string(j + 1) + ": cannot parse '" + cell
                                       + "' as a number");
            }
        }
    }
    return table;
}

inline CsvTable read_matrix_csv(const std::string& path, header_mode mode = header_mode::automatic,
                                bool allow_missing = false)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    return parse_matrix_csv(in, mode, allow_missing, path);
}

/// One group token per non-blank line.
inline std::vector<std::string> read_groups(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        const auto tok = detail::trim(line);
        if (!tok.empty()) labels.emplace_back(tok);
    }
    if (labels.empty()) throw validation_error(path + ": no group labels");
    return labels;
}

inline void write_matrix_csv(std::ostream& out, const mat_t& M,
                             const std::vector<std::string>& names = {})
{
    out << std::setprecision(17);
    if (!names.empty()) {
        for (size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
        out << '\n';
    }
    for (index_t i = 0; i < M.rows(); ++i) {
        for (index_t j = 0; j < M.cols(); ++j) out << (j ? "," : "") << M(i, j);
        out << '\n';
    }
}

inline void write_matrix_csv(const std::string& path, const mat_t& M,
                             const std::vector<std::string>& names = {})
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    write_matrix_csv(out, M, names);
    if (!out) throw io_error("failed writing '" + path + "'");
}

} // namespace io
} // namespace gknock
