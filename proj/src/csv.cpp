#include "eeb/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "eeb/errors.hpp"

namespace eeb {

namespace {

constexpr const char* kEol = "\r\n";

std::string cell_text(const CsvCell& c) {
    if (const double* d = std::get_if<double>(&c)) return format_double(*d);
    if (const std::int64_t* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    return csv_escape(std::get<std::string>(c));
}

/// Comment lines must stay single-line.
std::string flatten(std::string s) {
    for (char& ch : s)
        if (ch == '\r' || ch == '\n') ch = ' ';
    return s;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;   // drop the sign of negative zero
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

void CsvTable::add_row(std::vector<CsvCell> row) {
    if (row.size() != columns_.size())
        throw ShapeError("csv row has " + std::to_string(row.size()) + " cells, expected " +
                         std::to_string(columns_.size()));
    rows_.push_back(std::move(row));
}

void CsvTable::write(std::ostream& os, const std::string& version, const std::string& config_hash) const {
    os << "# engine=eebound " << version << kEol;
    os << "# config_hash=" << config_hash << kEol;
    for (const auto& n : notes_) os << "# " << flatten(n) << kEol;
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << csv_escape(columns_[i]);
    os << kEol;
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << kEol;
    }
}

std::string CsvTable::str(const std::string& version, const std::string& config_hash) const {
    std::ostringstream os;
    write(os, version, config_hash);
    return os.str();
}

}  // namespace eeb
