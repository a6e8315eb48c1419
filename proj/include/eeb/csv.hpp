/**
 * @file csv.hpp
 * @brief RFC-4180 CSV tables with a provenance preamble
 */

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace eeb {

using CsvCell = std::variant<double, std::int64_t, std::string>;

/// Shortest-safe round-trip text for a double: %.17g, "nan", "inf", "-inf".
std::string format_double(double v);

/// Quote a field when it contains a comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

/// A table written as
///   # engine=<name> <version>
///   # config_hash=<hash>
///   # <note>...
///   header row
///   data rows
/// with CRLF line endings.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(std::vector<CsvCell> row);
    void note(std::string text) { notes_.push_back(std::move(text)); }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<CsvCell>>& rows() const { return rows_; }

    void write(std::ostream& os, const std::string& version, const std::string& config_hash) const;
    std::string str(const std::string& version, const std::string& config_hash) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<CsvCell>> rows_;
    std::vector<std::string> notes_;
};

}  // namespace eeb
